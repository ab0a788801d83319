#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "phasemem/errors.hpp"
#include "phasemem/microensemble.hpp"
#include "phasemem/smatrix.hpp"
#include "phasemem/stats.hpp"

using namespace phasemem;
using cplx = std::complex<double>;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1.0);
  return g;
}

// one-parameter Lorentzian fit of y ~ 1 / (1 + (x/w)^2) by golden section
double fit_lorentzian_width(const std::vector<double>& x, const std::vector<double>& y) {
  auto loss = [&](double w) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double m = 1.0 / (1.0 + (x[i] / w) * (x[i] / w));
      s += (y[i] - m) * (y[i] - m);
    }
    return s;
  };
  double a = std::log(x[1]), b = std::log(x.back() * 4.0);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = loss(std::exp(x1)), f2 = loss(std::exp(x2));
  for (int it = 0; it < 100; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a);
      f1 = loss(std::exp(x1));
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a);
      f2 = loss(std::exp(x2));
    }
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace

TEST_CASE("single pole: peak magnitude and the width of the envelope") {
  const double gamma = 0.8, e0 = 3.0;
  const auto grid = linspace(e0 - 5.0, e0 + 5.0, 4001);
  const auto s = smatrix::pole_series({e0}, {1.0}, gamma, grid);
  // |t(E0)| = 2 / gamma
  double peak = 0.0;
  std::size_t ipk = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double m = std::abs(s.at(i));
    if (m > peak) {
      peak = m;
      ipk = i;
    }
  }
  CHECK(peak == doctest::Approx(2.0 / gamma).epsilon(1e-6));
  // FWHM of |t|^2 equals gamma
  const double half = peak * peak / 2.0;
  double lo = grid[ipk], hi = grid[ipk];
  for (std::size_t i = ipk; i-- > 0;)
    if (std::norm(s.at(i)) < half) {
      lo = grid[i];
      break;
    }
  for (std::size_t i = ipk; i < grid.size(); ++i)
    if (std::norm(s.at(i)) < half) {
      hi = grid[i];
      break;
    }
  CHECK(hi - lo == doctest::Approx(gamma).epsilon(0.01));
}

TEST_CASE("pole series input validation") {
  CHECK_THROWS_AS(smatrix::pole_series({}, {}, 1.0, {0.0, 1.0}), config_error);
  CHECK_THROWS_AS(smatrix::pole_series({0.0}, {1.0, 2.0}, 1.0, {0.0, 1.0}), config_error);
}

TEST_CASE("overlapping-comb autocorrelation width recovers gamma_up") {
  smatrix::PoleModelConfig cfg;
  cfg.params.gamma_up = 10.0;
  cfg.params.spacing = 1.0;
  cfg.spins = {0};
  cfg.levels_per_class = 256;
  cfg.seed = 31;
  smatrix::CorrelatedPoleModel model(cfg);

  const double guard = 5.0 * cfg.params.gamma_up;
  const auto grid = linspace(guard, 256.0 - guard, 160);
  const int lags = 40;
  std::vector<cplx> acf(static_cast<std::size_t>(lags) + 1, 0.0);
  for (int r = 0; r < 600; ++r) {
    const auto x = model.draw(r);
    const auto s = model.series_for(x, 0, grid);
    for (int lag = 0; lag <= lags; ++lag) {
      cplx acc = 0.0;
      for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < grid.size(); ++i)
        acc += s.at(i) * std::conj(s.at(i + static_cast<std::size_t>(lag)));
      acf[static_cast<std::size_t>(lag)] += acc / static_cast<double>(grid.size() - lag);
    }
  }
  const double h = grid[1] - grid[0];
  std::vector<double> eps, y;
  for (int lag = 0; lag <= lags; ++lag) {
    eps.push_back(lag * h);
    y.push_back(std::norm(acf[static_cast<std::size_t>(lag)]) / std::norm(acf[0]));
  }
  const double width = fit_lorentzian_width(eps, y);
  CHECK(std::abs(width - cfg.params.gamma_up) < 0.1 * cfg.params.gamma_up);
}

TEST_CASE("energy averages: diagonal power, vanishing off-diagonal means") {
  smatrix::PoleModelConfig cfg;
  cfg.params.gamma_up = 8.0;
  cfg.params.spacing = 1.0;
  cfg.spins = {0, 1};
  cfg.levels_per_class = 96;
  cfg.seed = 32;
  smatrix::CorrelatedPoleModel model(cfg);
  const auto grid = linspace(20.0, 76.0, 512);
  smatrix::ModelParams params = cfg.params;

  stats::Running re_mean, im_mean;
  double power = 0.0;
  const int reals = 200;
  for (int r = 0; r < reals; ++r) {
    const auto x = model.draw(r);
    const auto sa = model.series_for(x, 0, grid);
    const auto sb = model.series_for(x, 1, grid);
    const auto avg = smatrix::energy_average_pair(grid, sa, sb, 40.0, params);
    CHECK(avg.points >= 20);
    re_mean.add(avg.mean_a.real());
    im_mean.add(avg.mean_a.imag());
    const auto self = smatrix::energy_average_pair(grid, sa, sa, 40.0, params);
    CHECK(self.mean_ab.imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(self.mean_ab.real() > 0.0);
    power += self.mean_ab.real();
  }
  CHECK(power > 0.0);
  CHECK(std::abs(re_mean.mean()) < 3.0 * re_mean.stderr_mean() + 1e-12);
  CHECK(std::abs(im_mean.mean()) < 3.0 * im_mean.stderr_mean() + 1e-12);
}

TEST_CASE("energy average window validation") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  const auto grid = linspace(0.0, 10.0, 64);
  smatrix::ComplexSeries s;
  s.re.assign(64, 1.0);
  s.im.assign(64, 0.0);
  CHECK_THROWS_AS(smatrix::energy_average_pair(grid, s, s, 0.5, p), config_error);
  CHECK_THROWS_AS(smatrix::energy_average_pair(grid, s, s, 50.0, p), config_error);
}

TEST_CASE("evaluate_t: numerator modes and channel validation") {
  micro::EnsembleConfig ecfg;
  ecfg.spins = {{0, 1, 24, 1.0}, {1, 1, 24, 1.0}};
  ecfg.channels = {"a", "b", "G"};
  ecfg.seed = 71;
  Rng rng(71);
  const auto k = micro::build_k_correlation(ecfg, rng);
  std::vector<levels::LevelSequence> seqs;
  for (std::size_t c = 0; c < ecfg.spins.size(); ++c)
    seqs.push_back(levels::generate_levels(ecfg.spins[c], levels::SpacingModel::picket, 71 + c));
  const auto ens = micro::build_gamma(ecfg, k, seqs, rng);

  smatrix::ModelParams p;
  p.gamma_up = 2.0;
  const auto grid = linspace(-2.0, 26.0, 512);

  smatrix::ChannelPair reaction{"a", "b"};
  const auto t_r = smatrix::evaluate_t(seqs, ens, reaction, p, grid);
  REQUIRE(t_r.values.size() == 2);
  CHECK(t_r.spins == std::vector<int>{0, 1});
  for (const auto& s : t_r.values)
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::isfinite(s.re[i]));

  smatrix::ChannelPair elastic{"a", "a"};
  CHECK_THROWS_AS(smatrix::evaluate_t(seqs, ens, elastic, p, grid, smatrix::NumeratorMode::reaction),
                  config_error);
  const auto t_ce =
      smatrix::evaluate_t(seqs, ens, elastic, p, grid, smatrix::NumeratorMode::compound_elastic);
  const auto t_de =
      smatrix::evaluate_t(seqs, ens, elastic, p, grid, smatrix::NumeratorMode::direct_elastic);
  CHECK(t_ce.values[0].re != t_de.values[0].re);

  // coarse grids violate the envelope-resolution precondition
  CHECK_THROWS_AS(smatrix::evaluate_t(seqs, ens, reaction, p, linspace(0.0, 24.0, 16)),
                  config_error);

  // the elastic variant with squared couplings has zero-mean numerators:
  // averaged over realizations, <t> vanishes within errors
  stats::Running re_de;
  Rng rng2(72);
  for (int r = 0; r < 150; ++r) {
    const auto kk = micro::build_k_correlation(ecfg, rng2);
    const auto e2 = micro::build_gamma(ecfg, kk, seqs, rng2);
    const auto td =
        smatrix::evaluate_t(seqs, e2, elastic, p, grid, smatrix::NumeratorMode::direct_elastic);
    const auto avg = smatrix::energy_average_pair(grid, td.values[0], td.values[0], 10.0, p);
    re_de.add(avg.mean_a.real());
  }
  CHECK(std::abs(re_de.mean()) < 3.0 * re_de.stderr_mean() + 1e-12);
}

TEST_CASE("independent classes: matched-pair product consistent with the shuffled null") {
  smatrix::PoleModelConfig cfg;
  cfg.params.gamma_up = 8.0;
  cfg.params.spacing = 1.0;
  cfg.spins = {0, 1};  // beta = 0: independent classes
  cfg.levels_per_class = 96;
  cfg.seed = 73;
  smatrix::CorrelatedPoleModel model(cfg);
  const auto grid = linspace(20.0, 76.0, 256);

  const int reals = 200;
  std::vector<smatrix::ComplexSeries> sa(reals), sb(reals);
  for (int r = 0; r < reals; ++r) {
    const auto x = model.draw(r);
    sa[static_cast<std::size_t>(r)] = model.series_for(x, 0, grid);
    sb[static_cast<std::size_t>(r)] = model.series_for(x, 1, grid);
  }
  stats::Running matched, shuffled;
  for (int r = 0; r < reals; ++r) {
    const auto m = smatrix::energy_average_pair(grid, sa[static_cast<std::size_t>(r)],
                                                sb[static_cast<std::size_t>(r)], 40.0, cfg.params);
    matched.add(m.mean_ab.real());
    const auto s = smatrix::energy_average_pair(
        grid, sa[static_cast<std::size_t>(r)],
        sb[static_cast<std::size_t>((r + 1) % reals)], 40.0, cfg.params);
    shuffled.add(s.mean_ab.real());
  }
  // the matched mean is consistent with zero at the spread of the shuffled null
  CHECK(std::abs(matched.mean()) < 3.0 * shuffled.stderr_mean() + 3.0 * matched.stderr_mean());
  CHECK(std::abs(shuffled.mean()) < 3.0 * shuffled.stderr_mean());
}

TEST_CASE("off-diagonal energy means vanish across the parameter matrix") {
  for (double gamma : {4.0, 12.0}) {
    for (double beta : {0.0, 2.0}) {
      smatrix::PoleModelConfig cfg;
      cfg.params.gamma_up = gamma;
      cfg.params.beta = beta;
      cfg.params.spacing = 1.0;
      cfg.spins = {0, 1};
      cfg.levels_per_class = 96;
      cfg.seed = 74 + static_cast<std::uint64_t>(gamma * 10 + beta);
      smatrix::CorrelatedPoleModel model(cfg);
      const auto grid = linspace(24.0, 72.0, 256);
      stats::Running re_a, im_a, re_b, im_b;
      for (int r = 0; r < 120; ++r) {
        const auto x = model.draw(r);
        const auto avg = smatrix::energy_average_pair(grid, model.series_for(x, 0, grid),
                                                      model.series_for(x, 1, grid),
                                                      2.5 * gamma, cfg.params);
        re_a.add(avg.mean_a.real());
        im_a.add(avg.mean_a.imag());
        re_b.add(avg.mean_b.real());
        im_b.add(avg.mean_b.imag());
      }
      for (const auto* acc : {&re_a, &im_a, &re_b, &im_b})
        CHECK(std::abs(acc->mean()) < 3.0 * acc->stderr_mean() + 1e-12);
    }
  }
}

TEST_CASE("cross-spin time law") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  p.beta = 0.4;
  CHECK(smatrix::cross_spin_time_law(p, 0, 2, 0.0) == doctest::Approx(1.0));
  CHECK(smatrix::cross_spin_time_law(p, 0, 2, 1.5) ==
        doctest::Approx(std::exp(-0.4 * 2 * 1.5)).epsilon(1e-12));
  CHECK_THROWS_AS(smatrix::cross_spin_time_law(p, 0, 1, -1.0), config_error);
}

TEST_CASE("cross-spin correlation closed forms") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  p.beta = 0.0;
  CHECK(smatrix::cross_spin_correlation(p, 0, 1) == doctest::Approx(1.0));
  p.beta = 1.0;
  CHECK(smatrix::cross_spin_correlation(p, 2, 3) == doctest::Approx(0.5));
  p.gamma_up = 2.0;
  p.beta = 0.01;
  CHECK(smatrix::cross_spin_correlation(p, 0, 1) == doctest::Approx(2.0 / 2.01).epsilon(1e-12));
  CHECK_THROWS_AS(smatrix::cross_spin_correlation(p, 1, 1), config_error);
  // strictly decreasing in beta |dJ|, equals one only at zero
  p.gamma_up = 1.0;
  double prev = 1.1;
  for (double beta : {0.0, 0.1, 0.5, 2.0, 10.0}) {
    p.beta = beta;
    const double c = smatrix::cross_spin_correlation(p, 0, 1);
    CHECK(c < prev);
    if (beta > 0.0) CHECK(c < 1.0);
    prev = c;
  }
}

TEST_CASE("same-spin enhancement closed forms") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  p.g_same = 0.0;
  CHECK(smatrix::spin_diag_enhancement(p) == doctest::Approx(2.0));
  p.g_same = 1.0;
  CHECK(smatrix::spin_diag_enhancement(p) == doctest::Approx(1.5));
  p.g_same = 1e9;
  CHECK(smatrix::spin_diag_enhancement(p) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("time power spectrum closed form and its integral") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  p.g_same = 4.0;
  const auto t = linspace(0.0, 40.0, 80001);
  const auto spec = smatrix::time_power_spectrum(p, t);
  const double pref = p.gamma_up * (p.gamma_up + p.g_same) / (2.0 * p.gamma_up + p.g_same);
  for (std::size_t i = 0; i < t.size(); i += 10000) {
    const double base = pref * std::exp(-t[i]);
    CHECK(spec[i] / base == doctest::Approx(1.0 + std::exp(-4.0 * t[i])).epsilon(1e-12));
  }
  // normalized total decay intensity: integral is one; the unnormalized shape
  // integrates to (1/gamma) x the same-spin enhancement factor
  double integral = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    integral += 0.5 * (spec[i] + spec[i - 1]) * (t[i] - t[i - 1]);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  const double shape_integral = 1.0 / p.gamma_up + 1.0 / (p.gamma_up + p.g_same);
  CHECK(shape_integral ==
        doctest::Approx(smatrix::spin_diag_enhancement(p) / p.gamma_up).epsilon(1e-12));
  CHECK_THROWS_AS(smatrix::time_power_spectrum(p, {-1.0}), config_error);
}

TEST_CASE("rotating correlation closed forms") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  p.beta = 0.3;
  p.hbar_omega = 0.0;
  const auto v = smatrix::rotating_correlation(p, 0, 1);
  CHECK(v.real() == doctest::Approx(smatrix::cross_spin_correlation(p, 0, 1)));
  CHECK(v.imag() == doctest::Approx(0.0));

  p.beta = 0.0;
  p.hbar_omega = 2.0;
  for (double t : {0.0, 0.7, 3.0})
    CHECK(std::abs(smatrix::rotating_time_law(p, 0, 1, t)) == doctest::Approx(1.0));

  p.hbar_omega = 10.0;
  CHECK(std::abs(smatrix::rotating_correlation(p, 0, 1)) ==
        doctest::Approx(1.0 / std::sqrt(101.0)).epsilon(1e-12));
}

TEST_CASE("correlated process: decorrelated and matched regimes") {
  smatrix::ProcessConfig pc;
  pc.params.gamma_up = 1.0;
  pc.params.beta = 100.0;
  pc.spins = {0, 1};
  pc.series_grid = false;
  for (int i = 0; i < 10; ++i) pc.grid.push_back(i * 30.0);
  pc.seed = 33;

  auto measure = [&](double beta, std::uint64_t seed, int reals) {
    auto cfg = pc;
    cfg.params.beta = beta;
    cfg.seed = seed;
    smatrix::CorrelatedProcess proc(cfg);
    double num = 0.0, da = 0.0, db = 0.0;
    for (int r = 0; r < reals; ++r) {
      const auto real = proc.draw(r);
      for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        const auto ta = real.series[0].at(i), tb = real.series[1].at(i);
        num += (ta * std::conj(tb)).real();
        da += std::norm(ta);
        db += std::norm(tb);
      }
    }
    return num / std::sqrt(da * db);
  };

  CHECK(std::abs(measure(100.0, 33, 1000)) < 0.02);
  CHECK(std::abs(measure(0.5, 34, 2000) - 2.0 / 3.0) < 0.02);
}

TEST_CASE("correlated process: autocorrelation width matches gamma_up") {
  smatrix::ProcessConfig pc;
  pc.params.gamma_up = 1.0;
  pc.spins = {0};
  pc.grid = linspace(0.0, 40.0, 256);
  pc.seed = 35;
  smatrix::CorrelatedProcess proc(pc);
  const int lags = 40, reals = 400;
  std::vector<cplx> acf(static_cast<std::size_t>(lags) + 1, 0.0);
  for (int r = 0; r < reals; ++r) {
    const auto real = proc.draw(r);
    const auto& s = real.series[0];
    for (int lag = 0; lag <= lags; ++lag) {
      cplx acc = 0.0;
      for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < s.size(); ++i)
        acc += s.at(i) * std::conj(s.at(i + static_cast<std::size_t>(lag)));
      acf[static_cast<std::size_t>(lag)] += acc / static_cast<double>(s.size() - lag);
    }
  }
  const double h = pc.grid[1] - pc.grid[0];
  std::vector<double> eps, y;
  for (int lag = 0; lag <= lags; ++lag) {
    eps.push_back(lag * h);
    y.push_back(std::norm(acf[static_cast<std::size_t>(lag)]) / std::norm(acf[0]));
  }
  CHECK(std::abs(fit_lorentzian_width(eps, y) - 1.0) < 0.05);
}

TEST_CASE("correlated process: rotating time law is realized") {
  smatrix::ProcessConfig pc;
  pc.params.gamma_up = 1.0;
  pc.params.beta = 0.2;
  pc.params.hbar_omega = 10.0;
  pc.spins = {0, 1};
  pc.seed = 36;
  pc.time_steps = 400;
  smatrix::CorrelatedProcess proc(pc);
  const auto& times = proc.times();

  std::vector<cplx> corr(times.size(), 0.0);
  std::vector<double> norm0(times.size(), 0.0), norm1(times.size(), 0.0);
  for (int r = 0; r < 400; ++r) {
    const auto real = proc.draw(r);
    for (std::size_t m = 0; m < times.size(); ++m) {
      corr[m] += real.time_coeff[0][m] * std::conj(real.time_coeff[1][m]);
      norm0[m] += std::norm(real.time_coeff[0][m]);
      norm1[m] += std::norm(real.time_coeff[1][m]);
    }
  }
  for (std::size_t m = 0; m < times.size(); m += 37) {
    if (norm0[m] <= 0.0) continue;
    const cplx measured = corr[m] / std::sqrt(norm0[m] * norm1[m]);
    const cplx target = smatrix::rotating_time_law(pc.params, 0, 1, times[m]);
    CHECK(std::abs(measured - target) < 0.2);
  }
}

TEST_CASE("process drawing is deterministic per (seed, realization)") {
  smatrix::ProcessConfig pc;
  pc.params.gamma_up = 1.0;
  pc.spins = {0, 1};
  pc.grid = {0.0, 10.0, 20.0};
  pc.series_grid = false;
  pc.seed = 37;
  smatrix::CorrelatedProcess proc(pc);
  const auto a = proc.draw(5);
  const auto b = proc.draw(5);
  CHECK(a.series[0].re == b.series[0].re);
  CHECK(a.series[1].im == b.series[1].im);
  const auto c = proc.draw(6);
  CHECK(a.series[0].re != c.series[0].re);
}

TEST_CASE("micro pole route reproduces the closed-form cross-spin law") {
  smatrix::PoleModelConfig cfg;
  cfg.params.gamma_up = 10.0;
  cfg.params.beta = 5.0;  // beta / gamma_up = 0.5
  cfg.params.spacing = 1.0;
  cfg.spins = {0, 1};
  cfg.levels_per_class = 256;
  cfg.seed = 38;
  const auto micro_est = smatrix::pole_cross_spin_correlation(cfg, 1500, 5);
  const double closed = smatrix::cross_spin_correlation(cfg.params, 0, 1);
  CHECK(std::abs(micro_est.value - closed) < 0.05);

  // phenomenological route with the same widths
  smatrix::ProcessConfig pc;
  pc.params = cfg.params;
  pc.spins = {0, 1};
  pc.series_grid = false;
  for (int i = 0; i < 8; ++i) pc.grid.push_back(i * 300.0);
  pc.seed = 39;
  smatrix::CorrelatedProcess proc(pc);
  double num = 0.0, da = 0.0, db = 0.0;
  for (int r = 0; r < 2000; ++r) {
    const auto real = proc.draw(r);
    for (std::size_t i = 0; i < pc.grid.size(); ++i) {
      num += (real.series[0].at(i) * std::conj(real.series[1].at(i))).real();
      da += std::norm(real.series[0].at(i));
      db += std::norm(real.series[1].at(i));
    }
  }
  const double pheno = num / std::sqrt(da * db);
  CHECK(std::abs(pheno - closed) < 0.03);
  CHECK(std::abs(micro_est.value - pheno) < 0.06);
}

TEST_CASE("simulated time power spectrum tracks the enhancement envelope") {
  smatrix::ModelParams p;
  p.gamma_up = 1.0;
  p.g_same = 1.0;
  p.spacing = 0.1;  // strongly overlapping
  const auto t = linspace(0.05, 3.0, 25);
  const auto check = smatrix::simulate_time_power_spectrum(p, 1000, 1500, 40, t);
  CHECK(check.max_rel_dev < 0.10);
}
