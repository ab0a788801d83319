// phasemem: simulation and analysis toolkit for compound-system amplitude
// correlations with slow cross-symmetry phase relaxation.
//
// Subcommands: simulate | correlate | observe | analyze | density | report.
// Exit codes: 0 ok, 2 bad configuration, 3 missing input, 4 model error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "phasemem/csv.hpp"
#include "phasemem/ddxkit.hpp"
#include "phasemem/density.hpp"
#include "phasemem/errors.hpp"
#include "phasemem/kernels.hpp"
#include "phasemem/levels.hpp"
#include "phasemem/manifest.hpp"
#include "phasemem/microensemble.hpp"
#include "phasemem/observables.hpp"
#include "phasemem/parallel.hpp"
#include "phasemem/smatrix.hpp"
#include "phasemem/stats.hpp"
#include "phasemem/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phasemem;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  int threads = 0;
  std::string format = "csv";
  std::string unit = "arb";  // label only; the physics is unit-free
};

std::uint64_t resolve_seed(const GlobalOpts& g) {
  if (g.seed_given) return g.seed;
  if (const char* env = std::getenv("PHASEMEM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw config_error("PHASEMEM_SEED is not an unsigned integer");
    }
  }
  return 0;
}

void ensure_out_dir(const std::string& out) {
  if (out.empty()) throw config_error("--out directory is required for this command");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create output directory " + out);
}

void add_global_opts(CLI::App* cmd, GlobalOpts& g) {
  cmd->add_option("--seed", g.seed, "random seed (fallback: PHASEMEM_SEED, then 0)")
      ->each([&g](const std::string&) { g.seed_given = true; });
  cmd->add_option("--out", g.out, "output directory");
  cmd->add_option("--threads", g.threads, "worker threads (0 = available parallelism)");
  cmd->add_option("--format", g.format, "csv|svg (svg adds quick-look plots)")
      ->check(CLI::IsMember({"csv", "svg"}));
  cmd->add_option("--unit", g.unit, "energy unit label for reports (arb|keV|MeV)");
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
}

double jget(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw config_error(std::string("config field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

int jget_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw config_error(std::string("config field '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

smatrix::ModelParams params_from_json(const json& j) {
  smatrix::ModelParams p;
  p.gamma_up = jget(j, "gamma_up", 1.0);
  p.beta = jget(j, "beta", 0.0);
  p.g_same = jget(j, "g_same", 0.0);
  p.gamma_spr = jget(j, "gamma_spr", 0.0);
  p.hbar_omega = jget(j, "hbar_omega", 0.0);
  p.spacing = jget(j, "spacing", 1.0);
  p.validate();
  return p;
}

std::vector<int> spins_from_json(const json& j, std::vector<int> fallback) {
  if (!j.contains("spins")) return fallback;
  if (!j.at("spins").is_array()) throw config_error("config field 'spins' must be an array");
  std::vector<int> out;
  for (const auto& v : j.at("spins")) out.push_back(v.get<int>());
  return out;
}

void maybe_plot(const GlobalOpts& g, const std::string& csv_path, const std::string& title,
                const std::vector<double>& x, const std::vector<double>& y) {
  if (g.format != "svg") return;
  svg::write_line_plot(csv_path.substr(0, csv_path.rfind('.')) + ".svg", title, x, y);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, GlobalOpts& g) {
  const json cfg = config_path.empty() ? json::object() : load_config(config_path);
  const std::uint64_t seed = resolve_seed(g);
  ensure_out_dir(g.out);

  const auto params = params_from_json(cfg);
  const auto spins = spins_from_json(cfg, {0, 1, 2, 3, 4});
  const int levels_per_class = jget_int(cfg, "levels_per_class", 64);
  const auto model = levels::spacing_model_from_string(
      cfg.value("spacing_model", std::string("picket")));
  const int grid_points = jget_int(cfg, "grid_points", 2048);

  micro::EnsembleConfig ecfg;
  ecfg.spins.clear();
  for (int jv : spins) ecfg.spins.push_back({jv, +1, levels_per_class, params.spacing});
  ecfg.channels = {"a", "b", "G"};
  ecfg.kappa = jget(cfg, "kappa", 0.0);
  ecfg.seed = seed;

  std::vector<levels::LevelSequence> seqs;
  for (std::size_t c = 0; c < ecfg.spins.size(); ++c)
    seqs.push_back(levels::generate_levels(ecfg.spins[c], model, seed + 17 * c));

  Rng rng(seed);
  const auto kc = micro::build_k_correlation(ecfg, rng);
  const auto ens = micro::build_gamma(ecfg, kc, seqs, rng);

  // energy grid spanning the spectrum, envelope resolved, edges guarded;
  // the point count is raised if needed to keep the spacing <= gamma_up / 5
  const double span = levels_per_class * params.spacing;
  const double guard = 5.0 * params.gamma_up;
  const int min_points =
      static_cast<int>(std::ceil((span + 2 * guard) / (params.gamma_up / 5.0))) + 2;
  const int npts = std::max(grid_points, min_points);
  std::vector<double> grid(static_cast<std::size_t>(npts));
  for (int i = 0; i < npts; ++i)
    grid[static_cast<std::size_t>(i)] = -guard + (span + 2 * guard) * i / (npts - 1.0);
  smatrix::ChannelPair pair;
  const auto tset = smatrix::evaluate_t(seqs, ens, pair, params, grid);

  csv::Table levels_table;
  levels_table.header = {"spin", "level_index", "energy"};
  for (std::size_t c = 0; c < seqs.size(); ++c)
    for (std::size_t mu = 0; mu < seqs[c].energies.size(); ++mu)
      levels_table.add_row({static_cast<double>(ecfg.spins[c].spin), static_cast<double>(mu),
                            seqs[c].energies[mu]});
  csv::write_table(levels_table, g.out + "/levels.csv");

  csv::Table tser;
  tser.header = {"E"};
  for (int jv : spins) {
    tser.header.push_back("re_t_J" + std::to_string(jv));
    tser.header.push_back("im_t_J" + std::to_string(jv));
  }
  std::vector<double> mean_abs2(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    for (std::size_t c = 0; c < tset.values.size(); ++c) {
      row.push_back(tset.values[c].re[i]);
      row.push_back(tset.values[c].im[i]);
      mean_abs2[i] += std::norm(tset.values[c].at(i));
    }
    tser.rows.push_back(std::move(row));
  }
  csv::write_table(tser, g.out + "/tmatrix.csv");
  maybe_plot(g, g.out + "/tmatrix.csv", "summed |t|^2", grid, mean_abs2);

  manifest::Manifest m;
  m.command = "simulate";
  m.seed = seed;
  m.config = {{"gamma_up", params.gamma_up},
              {"beta", params.beta},
              {"g_same", params.g_same},
              {"hbar_omega", params.hbar_omega},
              {"spacing", params.spacing},
              {"kappa", ecfg.kappa},
              {"spins", spins},
              {"levels_per_class", levels_per_class},
              {"spacing_model", levels::to_string(model)},
              {"grid_points", npts},
              {"threads", g.threads}};
  m.outputs = {"levels.csv", "tmatrix.csv"};
  m.kernel_lane = kernels::lane_name(kernels::active_lane());
  manifest::write(m, g.out);
  std::printf("simulate: wrote %s/levels.csv and %s/tmatrix.csv\n", g.out.c_str(), g.out.c_str());
  return 0;
}

int cmd_correlate(double gamma_up, double beta, int dj, double omega, int realizations,
                  GlobalOpts& g) {
  const std::uint64_t seed = resolve_seed(g);
  smatrix::ModelParams params;
  params.gamma_up = gamma_up;
  params.beta = beta;
  params.hbar_omega = omega;
  params.validate();
  if (dj < 1) throw config_error("--dj must be >= 1");
  if (realizations < 100) throw config_error("--realizations must be >= 100");

  smatrix::ProcessConfig pc;
  pc.params = params;
  pc.spins = {0, dj};
  pc.series_grid = false;
  for (int i = 0; i < 16; ++i) pc.grid.push_back(i * 25.0 * gamma_up);
  pc.seed = seed;
  smatrix::CorrelatedProcess proc(pc);

  const int batches = 20;
  std::vector<double> num(batches, 0.0), da(batches, 0.0), db(batches, 0.0);
  for (int r = 0; r < realizations; ++r) {
    const auto real = proc.draw(r);
    const int b = r % batches;
    for (std::size_t i = 0; i < pc.grid.size(); ++i) {
      const auto ta = real.series[0].at(i), tb = real.series[1].at(i);
      num[static_cast<std::size_t>(b)] += (ta * std::conj(tb)).real();
      da[static_cast<std::size_t>(b)] += std::norm(ta);
      db[static_cast<std::size_t>(b)] += std::norm(tb);
    }
  }
  stats::Running batch;
  double tn = 0.0, ta = 0.0, tb = 0.0;
  for (int b = 0; b < batches; ++b) {
    batch.add(num[static_cast<std::size_t>(b)] /
              std::sqrt(da[static_cast<std::size_t>(b)] * db[static_cast<std::size_t>(b)]));
    tn += num[static_cast<std::size_t>(b)];
    ta += da[static_cast<std::size_t>(b)];
    tb += db[static_cast<std::size_t>(b)];
  }
  const double sample = tn / std::sqrt(ta * tb);
  const double err = batch.stderr_mean();
  const double closed = omega == 0.0
                            ? smatrix::cross_spin_correlation(params, 0, dj)
                            : std::abs(smatrix::rotating_correlation(params, 0, dj));

  std::printf("sample_correlation %.4f +- %.4f\n", sample, err);
  std::printf("closed_form        %.4f\n", closed);
  std::printf("widths             gamma_up %g %s, beta %g %s\n", gamma_up, g.unit.c_str(), beta,
              g.unit.c_str());

  if (!g.out.empty()) {
    ensure_out_dir(g.out);
    csv::Table t;
    t.header = {"sample_correlation", "stderr", "closed_form"};
    t.add_row({sample, err, closed});
    csv::write_table(t, g.out + "/correlate.csv");
    manifest::Manifest m;
    m.command = "correlate";
    m.seed = seed;
    m.config = {{"gamma_up", gamma_up}, {"beta", beta},   {"dj", dj},
                {"hbar_omega", omega},  {"realizations", realizations}, {"threads", g.threads}};
    m.results = {{"sample_correlation", sample},
                 {"stderr", err},
                 {"closed_form", closed},
                 {"pass", std::abs(sample - closed) < std::max(3.0 * err, 0.02)}};
    m.outputs = {"correlate.csv"};
    m.kernel_lane = kernels::lane_name(kernels::active_lane());
    manifest::write(m, g.out);
  }
  return 0;
}

int cmd_observe(const std::string& config_path, GlobalOpts& g) {
  const json cfg = config_path.empty() ? json::object() : load_config(config_path);
  const std::uint64_t seed = resolve_seed(g);
  ensure_out_dir(g.out);

  const auto params = params_from_json(cfg);
  const auto spins = spins_from_json(cfg, {0, 1, 2, 3, 4});

  observables::AngularConfig acfg;
  acfg.params = params;
  acfg.spins = spins;
  acfg.realizations = jget_int(cfg, "realizations", 2000);
  acfg.energies_per_realization = jget_int(cfg, "energies_per_realization", 8);
  acfg.seed = seed;
  const double theta_step = jget(cfg, "theta_step", 15.0);
  for (double th = 15.0; th <= 165.0 + 1e-9; th += theta_step) acfg.theta_deg.push_back(th);

  const auto ad = observables::angular_distribution(acfg);
  csv::Table at;
  at.header = {"theta_deg", "intensity", "err"};
  for (std::size_t i = 0; i < ad.theta_deg.size(); ++i)
    at.add_row({ad.theta_deg[i], ad.intensity[i], ad.err[i]});
  csv::write_table(at, g.out + "/angular.csv");
  maybe_plot(g, g.out + "/angular.csv", "angular distribution", ad.theta_deg, ad.intensity);

  observables::ExcitationConfig exc;
  exc.params = params;
  exc.spins = spins;
  exc.channels = jget_int(cfg, "channels", 1);
  exc.share_channel_draws = cfg.value("share_channel_draws", false);
  exc.theta_deg = jget(cfg, "theta_deg", 30.0);
  exc.seed = seed;
  const int npts = jget_int(cfg, "excitation_points", 512);
  const double estep = params.gamma_up / 5.0;
  for (int i = 0; i < npts; ++i) exc.beam_energies.push_back(i * estep);
  const auto ex = observables::excitation_function(exc);
  csv::Table et;
  et.header = {"E_MeV", "intensity"};
  for (std::size_t i = 0; i < ex.energy.size(); ++i) et.add_row({ex.energy[i], ex.intensity[i]});
  csv::write_table(et, g.out + "/excitation.csv");
  maybe_plot(g, g.out + "/excitation.csv", "excitation function", ex.energy, ex.intensity);

  const auto st = observables::fluctuation_analysis(ex);
  csv::Table ft;
  ft.header = {"lag", "autocorr"};
  for (std::size_t i = 0; i < st.lag.size(); ++i) ft.add_row({st.lag[i], st.autocorr[i]});
  csv::write_table(ft, g.out + "/autocorr.csv");

  std::printf("normalized_variance %.4f\n", st.normalized_variance);
  std::printf("fitted_width        %.4f %s (gamma_up %.4f %s)\n", st.fitted_width,
              g.unit.c_str(), params.gamma_up, g.unit.c_str());
  if (st.has_period)
    std::printf("oscillation_period  %.4f (significance %.1f)\n", st.period,
                st.period_significance);
  else
    std::printf("oscillation_period  none (significance %.1f)\n", st.period_significance);

  manifest::Manifest m;
  m.command = "observe";
  m.seed = seed;
  m.config = {{"gamma_up", params.gamma_up},
              {"beta", params.beta},
              {"g_same", params.g_same},
              {"hbar_omega", params.hbar_omega},
              {"spins", spins},
              {"realizations", acfg.realizations},
              {"channels", exc.channels},
              {"share_channel_draws", exc.share_channel_draws},
              {"excitation_points", npts},
              {"threads", g.threads}};
  m.results = {{"normalized_variance", st.normalized_variance},
               {"fitted_width", st.fitted_width},
               {"closed_form", params.gamma_up},
               {"pass", std::abs(st.fitted_width - params.gamma_up) < 0.25 * params.gamma_up}};
  m.outputs = {"angular.csv", "excitation.csv", "autocorr.csv"};
  m.kernel_lane = kernels::lane_name(kernels::active_lane());
  manifest::write(m, g.out);
  return 0;
}

int cmd_analyze(const std::string& path, const std::string& fb, double eout, int legendre_order,
                bool bound, const std::string& fit_t_range, double frame_factor,
                const ddx::ScalingParams& scaling, GlobalOpts& g) {
  if (!fs::exists(path)) throw io_error("input file not found: " + path);
  ddx::DdxDataset ds = ddx::parse_ddx(path);
  if (frame_factor > 0.0) {
    bool any_lab = false;
    for (const auto& row : ds.rows) any_lab |= (row.frame == ddx::Frame::lab);
    if (!any_lab) std::fprintf(stderr, "note: dataset is already in cm, --to-cm is a no-op\n");
    ds = ddx::lab_to_cm(ds, frame_factor);
  }

  if (!fb.empty()) {
    const auto comma = fb.find(',');
    if (comma == std::string::npos) throw config_error("--fb expects 'theta_f,theta_b'");
    const double tf = std::stod(fb.substr(0, comma));
    const double tb = std::stod(fb.substr(comma + 1));
    if (eout <= 0.0) throw config_error("--eout is required with --fb");
    const auto r = ddx::fb_ratio(ds, eout, tf, tb);
    if (r.infinite)
      std::printf("fb_ratio(E_out=%.4g, %g/%g deg) = infinity (zero backward intensity)\n", eout,
                  tf, tb);
    else
      std::printf("fb_ratio(E_out=%.4g, %g/%g deg) = %.3f +- %.3f\n", eout, tf, tb, r.value,
                  r.err);
  }

  if (legendre_order >= 0) {
    csv::Table t;
    t.header = {"E_out_MeV"};
    for (int k = 0; k <= legendre_order; ++k) t.header.push_back("a" + std::to_string(k));
    t.header.push_back("chi2");
    for (double e : ds.emission_energies()) {
      const auto fit = ddx::legendre_fit(ds, e, legendre_order);
      std::vector<double> row{e};
      row.insert(row.end(), fit.coeff.begin(), fit.coeff.end());
      row.push_back(fit.chi2);
      t.rows.push_back(std::move(row));
    }
    if (!g.out.empty()) {
      ensure_out_dir(g.out);
      csv::write_table(t, g.out + "/legendre.csv");
      std::printf("legendre: wrote %s/legendre.csv\n", g.out.c_str());
    } else {
      for (const auto& row : t.rows) {
        std::printf("E_out %.4g:", row[0]);
        for (std::size_t i = 1; i + 1 < row.size(); ++i) std::printf(" a%zu=%.5g", i - 1, row[i]);
        std::printf(" chi2=%.3g\n", row.back());
      }
    }
  }

  if (bound) {
    if (eout <= 0.0) throw config_error("--eout is required with --bound");
    const auto sb = ddx::symmetric_bound(ds, eout);
    std::printf("symmetric bound at E_out=%.4g: constant %.4g mb/sr/MeV, share %.1f%% of %.4g mb/MeV\n",
                eout, sb.constant_bound, 100.0 * sb.share, sb.total_angle_integrated);
  }

  if (!fit_t_range.empty()) {
    const auto comma = fit_t_range.find(',');
    if (comma == std::string::npos) throw config_error("--fit-t expects 'emin,emax'");
    const double emin = std::stod(fit_t_range.substr(0, comma));
    const double emax = std::stod(fit_t_range.substr(comma + 1));
    const auto fit = ddx::scale_spectrum_fit_t(ds, scaling, emin, emax);
    if (fit.unbounded)
      std::printf("temperature: unbounded (flat scaled spectrum)\n");
    else
      std::printf("temperature %.3f +- %.3f MeV (barrier %.2f MeV)\n", fit.temperature, fit.err,
                  scaling.barrier());
  }

  if (!g.out.empty()) {
    ensure_out_dir(g.out);
    manifest::Manifest m;
    m.command = "analyze";
    m.seed = 0;
    m.config = {{"file", path},
                {"fb", fb},
                {"eout", eout},
                {"legendre", legendre_order},
                {"bound", bound},
                {"fit_t", fit_t_range},
                {"to_cm", frame_factor}};
    if (legendre_order >= 0) m.outputs.push_back("legendre.csv");
    m.kernel_lane = kernels::lane_name(kernels::active_lane());
    manifest::write(m, g.out);
  }
  return 0;
}

int cmd_density(int points, double volume, double q, GlobalOpts& g) {
  const std::uint64_t seed = resolve_seed(g);
  density::GridConfig grid{points, volume};
  grid.validate();

  const auto [fa, fb] = density::synth_correlated_fields(grid, q, seed);
  const double l = density::intensity_correlator(fa, fb);
  std::printf("intensity_correlator L = %.4f (target %.4f)\n", l, q);

  std::vector<int> blocks;
  for (int bsz = points / 16; bsz >= 1; bsz /= 2) blocks.push_back(bsz);
  const auto probe = density::needle_probe(fa, fb, blocks);

  if (!g.out.empty()) {
    ensure_out_dir(g.out);
    csv::Table t;
    t.header = {"block_cells", "product_mean"};
    std::vector<double> x, y;
    for (const auto& row : probe) {
      t.add_row({static_cast<double>(row.block_cells), row.product_mean});
      x.push_back(row.block_cells);
      y.push_back(row.product_mean);
    }
    csv::write_table(t, g.out + "/needle.csv");

    csv::Table snap;
    snap.header = {"cell", "phi_a", "phi_b"};
    for (std::size_t i = 0; i < fa.values.size(); ++i)
      snap.add_row({static_cast<double>(i), fa.values[i], fb.values[i]});
    csv::write_table(snap, g.out + "/fields.csv");

    manifest::Manifest m;
    m.command = "density";
    m.seed = seed;
    m.config = {{"points", points}, {"volume", volume}, {"q", q}, {"threads", g.threads}};
    m.results = {{"intensity_correlator", l},
                 {"closed_form", q},
                 {"pass", std::abs(l - q) < 0.05}};
    m.outputs = {"needle.csv", "fields.csv"};
    m.kernel_lane = kernels::lane_name(kernels::active_lane());
    manifest::write(m, g.out);
  }
  return 0;
}

int cmd_report(const std::string& dir, GlobalOpts& g) {
  if (!fs::exists(dir)) throw io_error("results directory not found: " + dir);
  struct Row {
    fs::file_time_type mtime;
    std::string path;
    manifest::Manifest m;
    bool valid = false;
  };
  std::vector<Row> rows;
  auto consider = [&rows](const fs::path& p) {
    if (p.filename() != "manifest.json") return;
    Row r;
    r.path = p.string();
    r.mtime = fs::last_write_time(p);
    try {
      r.m = manifest::read(p.string());
      r.valid = true;
    } catch (const std::exception&) {
      r.valid = false;
    }
    rows.push_back(std::move(r));
  };
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) consider(entry.path());
  if (rows.empty()) throw io_error("no manifests found in " + dir);

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.mtime == b.mtime ? a.path < b.path : a.mtime < b.mtime;
  });

  std::printf("command,seed,estimate,closed_form,pass,status,path\n");
  for (const auto& r : rows) {
    if (!r.valid) {
      std::printf(",,,,,invalid,%s\n", r.path.c_str());
      continue;
    }
    std::string est = "", target = "", pass = "";
    if (r.m.results.is_object()) {
      for (const char* key : {"sample_correlation", "fitted_width", "intensity_correlator"})
        if (r.m.results.contains(key)) est = csv::format_double(r.m.results[key].get<double>());
      if (r.m.results.contains("closed_form"))
        target = csv::format_double(r.m.results["closed_form"].get<double>());
      if (r.m.results.contains("pass"))
        pass = r.m.results["pass"].get<bool>() ? "pass" : "fail";
    }
    std::printf("%s,%llu,%s,%s,%s,ok,%s\n", r.m.command.c_str(),
                static_cast<unsigned long long>(r.m.seed), est.c_str(), target.c_str(),
                pass.c_str(), r.path.c_str());
  }
  (void)g;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compound-system amplitude correlation laboratory"};
  app.require_subcommand(1);

  GlobalOpts g_sim, g_cor, g_obs, g_ana, g_den, g_rep;

  std::string sim_config;
  auto* sim = app.add_subcommand("simulate", "build ensembles and t-matrix series");
  sim->add_option("--config", sim_config, "JSON configuration file");
  add_global_opts(sim, g_sim);

  double cor_gamma = 1.0, cor_beta = 0.0, cor_omega = 0.0;
  int cor_dj = 1, cor_realizations = 10000;
  auto* cor = app.add_subcommand("correlate", "cross-spin correlation Monte Carlo");
  cor->add_option("--gamma-up", cor_gamma, "total decay width");
  cor->add_option("--beta", cor_beta, "cross-symmetry phase relaxation width");
  cor->add_option("--omega", cor_omega, "rotation quantum (hbar omega)");
  cor->add_option("--dj", cor_dj, "spin difference |J - J'|");
  cor->add_option("--realizations", cor_realizations, "ensemble size");
  add_global_opts(cor, g_cor);

  std::string obs_config;
  auto* obs = app.add_subcommand("observe", "angular distributions and excitation functions");
  obs->add_option("--config", obs_config, "JSON configuration file");
  add_global_opts(obs, g_obs);

  std::string ana_path, ana_fb, ana_fit_t;
  double ana_eout = 0.0, ana_to_cm = 0.0;
  int ana_legendre = -1;
  bool ana_bound = false;
  ddx::ScalingParams scaling;
  auto* ana = app.add_subcommand("analyze", "double-differential spectrum diagnostics");
  ana->add_option("file", ana_path, "DDX CSV file")->required();
  ana->add_option("--fb", ana_fb, "forward,backward angles in degrees");
  ana->add_option("--eout", ana_eout, "emission energy (MeV)");
  ana->add_option("--legendre", ana_legendre, "Legendre fit order");
  ana->add_flag("--bound", ana_bound, "symmetric-component bounds");
  ana->add_option("--fit-t", ana_fit_t, "emin,emax for the temperature fit (MeV)");
  ana->add_option("--to-cm", ana_to_cm, "apply the lab-to-cm factor first");
  ana->add_option("--z", scaling.z, "residual nucleus charge");
  ana->add_option("--a", scaling.a, "residual nucleus mass number");
  ana->add_option("--zfrag", scaling.z_fragment, "emitted particle charge");
  ana->add_option("--barrier", scaling.barrier_mev, "barrier height (MeV, 0 = default)");
  ana->add_option("--hw-barrier", scaling.hbar_omega_mev, "barrier curvature (MeV)");
  add_global_opts(ana, g_ana);

  int den_points = 4096;
  double den_volume = 1.0, den_q = 0.0;
  auto* den = app.add_subcommand("density", "wavefunction-correlation grid experiments");
  den->add_option("--points", den_points, "grid cells");
  den->add_option("--volume", den_volume, "total volume");
  den->add_option("--q", den_q, "target intensity correlation");
  add_global_opts(den, g_den);

  std::string rep_dir;
  auto* rep = app.add_subcommand("report", "summarize run manifests");
  rep->add_option("dir", rep_dir, "results directory")->required();
  add_global_opts(rep, g_rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (const GlobalOpts* g : {&g_sim, &g_cor, &g_obs, &g_ana, &g_den, &g_rep})
      if (g->threads > 0) parallel::set_threads(g->threads);
    if (sim->parsed()) return cmd_simulate(sim_config, g_sim);
    if (cor->parsed()) return cmd_correlate(cor_gamma, cor_beta, cor_dj, cor_omega,
                                            cor_realizations, g_cor);
    if (obs->parsed()) return cmd_observe(obs_config, g_obs);
    if (ana->parsed())
      return cmd_analyze(ana_path, ana_fb, ana_eout, ana_legendre, ana_bound, ana_fit_t,
                         ana_to_cm, scaling, g_ana);
    if (den->parsed()) return cmd_density(den_points, den_volume, den_q, g_den);
    if (rep->parsed()) return cmd_report(rep_dir, g_rep);
  } catch (const config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const model_error& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
