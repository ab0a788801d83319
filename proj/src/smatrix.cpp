#include "phasemem/smatrix.hpp"

#include <algorithm>
#include <cmath>

#include "phasemem/errors.hpp"
#include "phasemem/kernels.hpp"

namespace phasemem::smatrix {

using cplx = std::complex<double>;

void ModelParams::validate() const {
  if (!(gamma_up > 0.0)) throw config_error("model params: gamma_up must be positive");
  if (beta < 0.0) throw config_error("model params: beta must be non-negative");
  if (g_same < 0.0) throw config_error("model params: g_same must be non-negative");
  if (gamma_spr < 0.0) throw config_error("model params: gamma_spr must be non-negative");
  if (!(spacing > 0.0)) throw config_error("model params: spacing must be positive");
}

ComplexSeries pole_series(const std::vector<double>& level_energies,
                          const std::vector<double>& numerators, double gamma_up,
                          const std::vector<double>& grid) {
  if (level_energies.empty()) throw config_error("pole_series: empty level sequence");
  if (level_energies.size() != numerators.size())
    throw config_error("pole_series: one numerator per level required");
  ComplexSeries out;
  out.re.assign(grid.size(), 0.0);
  out.im.assign(grid.size(), 0.0);
  const auto& k = kernels::ops();
  const double half = 0.5 * gamma_up;
  for (std::size_t mu = 0; mu < level_energies.size(); ++mu)
    k.pole_accumulate(out.re.data(), out.im.data(), grid.data(), grid.size(),
                      level_energies[mu], numerators[mu], half);
  return out;
}

namespace {

void check_grid(const std::vector<double>& grid, double gamma_up) {
  if (grid.size() < 2) throw config_error("energy grid needs at least two points");
  const double h = grid[1] - grid[0];
  if (!(h > 0.0)) throw config_error("energy grid must be increasing");
  if (h > gamma_up / 5.0 * (1.0 + 1e-12))
    throw config_error("energy grid spacing must be <= gamma_up / 5 to resolve the envelope");
}

int channel_index(const micro::EnsembleConfig& cfg, const std::string& name) {
  for (std::size_t i = 0; i < cfg.channels.size(); ++i)
    if (cfg.channels[i] == name) return static_cast<int>(i);
  throw config_error("unknown channel label: " + name);
}

}  // namespace

TMatrixSeries evaluate_t(const std::vector<levels::LevelSequence>& seqs,
                         const micro::AmplitudeEnsemble& ens, const ChannelPair& pair,
                         const ModelParams& params, const std::vector<double>& grid,
                         NumeratorMode mode) {
  params.validate();
  check_grid(grid, params.gamma_up);
  if (seqs.size() != ens.cfg.spins.size())
    throw config_error("evaluate_t: one level sequence per spin class required");

  const int ent = channel_index(ens.cfg, pair.entrance);
  int other = -1;
  switch (mode) {
    case NumeratorMode::reaction:
      if (pair.elastic())
        throw config_error("evaluate_t: reaction mode needs distinct entrance/exit channels");
      other = channel_index(ens.cfg, pair.exit);
      break;
    case NumeratorMode::compound_elastic:
      other = channel_index(ens.cfg, "G");
      break;
    case NumeratorMode::direct_elastic:
      other = ent;
      break;
  }

  TMatrixSeries out;
  out.grid = grid;
  for (std::size_t c = 0; c < seqs.size(); ++c) {
    if (seqs[c].energies.empty()) throw config_error("evaluate_t: empty level sequence");
    const int n = static_cast<int>(seqs[c].energies.size());
    std::vector<double> num(static_cast<std::size_t>(n));
    for (int mu = 0; mu < n; ++mu) {
      const double ge = ens.gamma_at(static_cast<int>(c), mu, ent);
      switch (mode) {
        case NumeratorMode::reaction:
        case NumeratorMode::compound_elastic:
          num[static_cast<std::size_t>(mu)] =
              ens.gamma_at(static_cast<int>(c), mu, other) * ge;
          break;
        case NumeratorMode::direct_elastic:
          num[static_cast<std::size_t>(mu)] = ge * ge - 1.0;
          break;
      }
    }
    out.spins.push_back(ens.cfg.spins[c].spin);
    out.values.push_back(pole_series(seqs[c].energies, num, params.gamma_up, grid));
  }
  return out;
}

PairAverage energy_average_pair(const std::vector<double>& grid, const ComplexSeries& a,
                                const ComplexSeries& b, double window,
                                const ModelParams& params) {
  if (a.size() != grid.size() || b.size() != grid.size())
    throw config_error("energy_average_pair: series/grid size mismatch");
  if (!(window > params.gamma_up))
    throw config_error("energy_average_pair: averaging window must exceed gamma_up");
  if (params.gamma_spr > 0.0 && window > params.gamma_spr)
    throw config_error("energy_average_pair: averaging window must not exceed gamma_spr");
  const double span = grid.back() - grid.front();
  if (window > span) throw config_error("energy_average_pair: window exceeds the grid");
  const double mid = 0.5 * (grid.front() + grid.back());
  const double lo = mid - 0.5 * window, hi = mid + 0.5 * window;

  PairAverage avg;
  cplx sab = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < lo || grid[i] > hi) continue;
    const cplx va = a.at(i), vb = b.at(i);
    sab += va * std::conj(vb);
    sa += va;
    sb += vb;
    ++avg.points;
  }
  if (avg.points < 20)
    throw config_error("energy_average_pair: window must span at least 20 grid points");
  const double n = static_cast<double>(avg.points);
  avg.mean_ab = sab / n;
  avg.mean_a = sa / n;
  avg.mean_b = sb / n;
  return avg;
}

double cross_spin_correlation(const ModelParams& params, int j_a, int j_b) {
  if (j_a == j_b) throw config_error("cross_spin_correlation: spins must differ");
  const double dj = std::abs(j_a - j_b);
  return params.gamma_up / (params.gamma_up + params.beta * dj);
}

double cross_spin_time_law(const ModelParams& params, int j_a, int j_b, double t) {
  if (t < 0.0) throw config_error("cross_spin_time_law: t must be non-negative");
  return std::exp(-params.beta * std::abs(j_a - j_b) * t);
}

double spin_diag_enhancement(const ModelParams& params) {
  return 1.0 + params.gamma_up / (params.gamma_up + params.g_same);
}

std::vector<double> time_power_spectrum(const ModelParams& params,
                                        const std::vector<double>& t_grid) {
  params.validate();
  const double g = params.gamma_up, gs = params.g_same;
  const double prefactor = g * (g + gs) / (2.0 * g + gs);
  std::vector<double> p(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0) throw config_error("time_power_spectrum: t must be non-negative");
    p[i] = prefactor * std::exp(-g * t_grid[i]) * (1.0 + std::exp(-gs * t_grid[i]));
  }
  return p;
}

std::complex<double> rotating_correlation(const ModelParams& params, int j_a, int j_b) {
  if (j_a == j_b) throw config_error("rotating_correlation: spins must differ");
  const double dj = std::abs(j_a - j_b);
  const cplx den(params.gamma_up + params.beta * dj,
                 params.hbar_omega * static_cast<double>(j_a - j_b));
  return params.gamma_up / den;
}

std::complex<double> rotating_time_law(const ModelParams& params, int j_a, int j_b, double t) {
  if (t < 0.0) throw config_error("rotating_time_law: t must be non-negative");
  const double decay = std::exp(-params.beta * std::abs(j_a - j_b) * t);
  return std::polar(decay, static_cast<double>(j_b - j_a) * params.hbar_omega * t);
}

// --------------------------------------------------------------------------
// time-lattice generator
// --------------------------------------------------------------------------

namespace {

// factor L with L L^H = rho for a Hermitian PSD matrix, via the eigensystem
std::vector<cplx> psd_factor(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  if (es.info() != Eigen::Success) throw model_error("correlation matrix eigensolve failed");
  const auto& vals = es.eigenvalues();
  if (vals.minCoeff() < -1e-9)
    throw model_error("target correlation matrix is not positive semidefinite");
  const int n = static_cast<int>(rho.rows());
  const Eigen::VectorXcd scale = vals.cwiseMax(0.0).cwiseSqrt().cast<cplx>();
  Eigen::MatrixXcd f = es.eigenvectors() * scale.asDiagonal();
  std::vector<cplx> flat(static_cast<std::size_t>(n) * n);
  for (int col = 0; col < n; ++col)
    for (int row = 0; row < n; ++row)
      flat[static_cast<std::size_t>(col) * n + row] = f(row, col);
  return flat;
}

}  // namespace

CorrelatedProcess::CorrelatedProcess(ProcessConfig cfg) : cfg_(std::move(cfg)), root_(cfg_.seed) {
  cfg_.params.validate();
  if (cfg_.spins.size() < 1) throw config_error("correlated process: need at least one spin");
  const double g = cfg_.params.gamma_up;

  double dt = 0.05 / g;
  if (!cfg_.grid.empty()) {
    if (cfg_.series_grid) check_grid(cfg_.grid, g);
    for (std::size_t i = 1; i < cfg_.grid.size(); ++i)
      if (!(cfg_.grid[i] > cfg_.grid[i - 1]))
        throw config_error("correlated process: grid must be strictly increasing");
    const double span = cfg_.grid.back() - cfg_.grid.front();
    if (span > 0.0) dt = std::min(dt, M_PI / (2.0 * span));
  }
  const double horizon = cfg_.time_horizon / g;
  int m = cfg_.time_steps > 0 ? cfg_.time_steps
                              : static_cast<int>(std::ceil(horizon / dt));
  if (m < 16) m = 16;
  if (m > 20000) throw config_error("correlated process: grid span too large for gamma_up");
  if (cfg_.time_steps > 0) dt = horizon / m;

  const int ncls = static_cast<int>(cfg_.spins.size());
  times_.resize(static_cast<std::size_t>(m));
  envelope_.resize(static_cast<std::size_t>(m));
  mixing_.resize(static_cast<std::size_t>(m));
  const double norm = std::sqrt(dt * g);
  for (int i = 0; i < m; ++i) {
    const double t = i * dt;
    times_[static_cast<std::size_t>(i)] = t;
    envelope_[static_cast<std::size_t>(i)] = norm * std::exp(-0.5 * g * t);
    Eigen::MatrixXcd rho(ncls, ncls);
    for (int a = 0; a < ncls; ++a)
      for (int b = 0; b < ncls; ++b) {
        const int dj = cfg_.spins[static_cast<std::size_t>(a)] -
                       cfg_.spins[static_cast<std::size_t>(b)];
        rho(a, b) = std::polar(std::exp(-cfg_.params.beta * std::abs(dj) * t),
                               -cfg_.params.hbar_omega * dj * t);
      }
    mixing_[static_cast<std::size_t>(i)] = psd_factor(rho);
  }

  wave_re_.resize(static_cast<std::size_t>(m));
  wave_im_.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    auto& wr = wave_re_[static_cast<std::size_t>(i)];
    auto& wi = wave_im_[static_cast<std::size_t>(i)];
    wr.resize(cfg_.grid.size());
    wi.resize(cfg_.grid.size());
    for (std::size_t gidx = 0; gidx < cfg_.grid.size(); ++gidx) {
      wr[gidx] = std::cos(cfg_.grid[gidx] * times_[static_cast<std::size_t>(i)]);
      wi[gidx] = std::sin(cfg_.grid[gidx] * times_[static_cast<std::size_t>(i)]);
    }
  }
}

ProcessRealization CorrelatedProcess::draw(int realization) const {
  const int ncls = static_cast<int>(cfg_.spins.size());
  const int m = static_cast<int>(times_.size());
  Rng rng = root_.fork(static_cast<std::uint64_t>(realization));

  ProcessRealization out;
  out.time_coeff.assign(static_cast<std::size_t>(ncls),
                        std::vector<cplx>(static_cast<std::size_t>(m)));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<cplx> z(static_cast<std::size_t>(ncls));
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < ncls; ++c)
      z[static_cast<std::size_t>(c)] = cplx(rng.normal(), rng.normal()) * inv_sqrt2;
    const auto& mix = mixing_[static_cast<std::size_t>(i)];
    for (int row = 0; row < ncls; ++row) {
      cplx acc = 0.0;
      for (int col = 0; col < ncls; ++col)
        acc += mix[static_cast<std::size_t>(col) * ncls + row] * z[static_cast<std::size_t>(col)];
      out.time_coeff[static_cast<std::size_t>(row)][static_cast<std::size_t>(i)] =
          acc * envelope_[static_cast<std::size_t>(i)];
    }
  }

  if (!cfg_.grid.empty()) {
    const auto& k = kernels::ops();
    out.series.resize(static_cast<std::size_t>(ncls));
    for (int c = 0; c < ncls; ++c) {
      auto& s = out.series[static_cast<std::size_t>(c)];
      s.re.assign(cfg_.grid.size(), 0.0);
      s.im.assign(cfg_.grid.size(), 0.0);
      for (int i = 0; i < m; ++i) {
        const cplx w = out.time_coeff[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
        k.caxpy(s.re.data(), s.im.data(), wave_re_[static_cast<std::size_t>(i)].data(),
                wave_im_[static_cast<std::size_t>(i)].data(), w.real(), w.imag(),
                cfg_.grid.size());
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// correlated pole combs
// --------------------------------------------------------------------------

CorrelatedPoleModel::CorrelatedPoleModel(PoleModelConfig cfg)
    : cfg_(std::move(cfg)), root_(cfg_.seed) {
  cfg_.params.validate();
  if (cfg_.levels_per_class < 2) throw config_error("pole model: need >= 2 levels per class");
  const int nc = cfg_.levels_per_class;
  const int ncls = static_cast<int>(cfg_.spins.size());
  const double d = cfg_.params.spacing;

  energies_.resize(static_cast<std::size_t>(nc));
  for (int mu = 0; mu < nc; ++mu) energies_[static_cast<std::size_t>(mu)] = mu * d;

  const int n = nc * ncls;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  auto lorentz = [d](double dist, double width) {
    return width > 0.0 ? (1.0 / M_PI) * d * width / (dist * dist + width * width) : 0.0;
  };
  for (int a = 0; a < ncls; ++a) {
    for (int b = 0; b < ncls; ++b) {
      for (int mu = 0; mu < nc; ++mu) {
        for (int nu = 0; nu < nc; ++nu) {
          if (a == b && mu == nu) continue;
          double dist = std::abs(mu - nu);
          if (cfg_.circulant) dist = std::min(dist, static_cast<double>(nc) - dist);
          dist *= d;
          double q = 0.0;
          if (a == b) {
            q = lorentz(dist, cfg_.params.g_same);
          } else {
            const int dj = std::abs(cfg_.spins[static_cast<std::size_t>(a)] -
                                    cfg_.spins[static_cast<std::size_t>(b)]);
            q = lorentz(dist, cfg_.params.beta * dj);
          }
          cov(a * nc + mu, b * nc + nu) = q;
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw model_error("pole model: covariance eigensolve failed");
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw model_error("pole model: requested pair correlations are not positive semidefinite");
  factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

std::vector<std::vector<double>> CorrelatedPoleModel::draw(int realization) const {
  const int nc = cfg_.levels_per_class;
  const int ncls = static_cast<int>(cfg_.spins.size());
  const int n = nc * ncls;
  Rng rng = root_.fork(static_cast<std::uint64_t>(realization));
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();
  const Eigen::VectorXd x = factor_ * z;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(ncls),
                                       std::vector<double>(static_cast<std::size_t>(nc)));
  for (int c = 0; c < ncls; ++c)
    for (int mu = 0; mu < nc; ++mu)
      out[static_cast<std::size_t>(c)][static_cast<std::size_t>(mu)] = x(c * nc + mu);
  return out;
}

ComplexSeries CorrelatedPoleModel::series_for(const std::vector<std::vector<double>>& draw_result,
                                              int cls, const std::vector<double>& grid) const {
  return pole_series(energies_, draw_result[static_cast<std::size_t>(cls)],
                     cfg_.params.gamma_up, grid);
}

stats::Estimate pole_cross_spin_correlation(const PoleModelConfig& cfg, int realizations,
                                            int energies_per_realization) {
  if (cfg.spins.size() < 2)
    throw config_error("pole_cross_spin_correlation: need two spin classes");
  CorrelatedPoleModel model(cfg);
  const double span = model.level_energies().back();
  std::vector<double> sample_e(static_cast<std::size_t>(energies_per_realization));
  for (int i = 0; i < energies_per_realization; ++i)
    sample_e[static_cast<std::size_t>(i)] =
        span * (0.35 + 0.3 * i / std::max(1, energies_per_realization - 1));

  // batch means over realizations for the error bar
  const int batches = 16;
  std::vector<double> num(batches, 0.0), den_a(batches, 0.0), den_b(batches, 0.0);
  for (int r = 0; r < realizations; ++r) {
    const auto x = model.draw(r);
    const int b = r % batches;
    for (double e : sample_e) {
      cplx ta = 0.0, tb = 0.0;
      const auto& levels = model.level_energies();
      for (std::size_t mu = 0; mu < levels.size(); ++mu) {
        const cplx den(e - levels[mu], 0.5 * cfg.params.gamma_up);
        ta += x[0][mu] / den;
        tb += x[1][mu] / den;
      }
      num[static_cast<std::size_t>(b)] += (ta * std::conj(tb)).real();
      den_a[static_cast<std::size_t>(b)] += std::norm(ta);
      den_b[static_cast<std::size_t>(b)] += std::norm(tb);
    }
  }
  stats::Running batch_corr;
  double tn = 0.0, ta = 0.0, tb = 0.0;
  for (int b = 0; b < batches; ++b) {
    batch_corr.add(num[static_cast<std::size_t>(b)] /
                   std::sqrt(den_a[static_cast<std::size_t>(b)] * den_b[static_cast<std::size_t>(b)]));
    tn += num[static_cast<std::size_t>(b)];
    ta += den_a[static_cast<std::size_t>(b)];
    tb += den_b[static_cast<std::size_t>(b)];
  }
  stats::Estimate est;
  est.value = tn / std::sqrt(ta * tb);
  est.err = batch_corr.stderr_mean();
  est.samples = static_cast<std::size_t>(realizations) * sample_e.size();
  return est;
}

TimeSpectrumCheck simulate_time_power_spectrum(const ModelParams& params, int levels_per_class,
                                               int realizations, std::uint64_t seed,
                                               const std::vector<double>& t_grid) {
  params.validate();
  // correlated comb and a correlation-free baseline, processed identically
  PoleModelConfig corr_cfg;
  corr_cfg.params = params;
  corr_cfg.spins = {0};
  corr_cfg.levels_per_class = levels_per_class;
  corr_cfg.circulant = true;
  corr_cfg.seed = seed;
  PoleModelConfig base_cfg = corr_cfg;
  base_cfg.params.g_same = 0.0;
  base_cfg.seed = seed ^ 0xb0a5eULL;
  CorrelatedPoleModel corr(corr_cfg), base(base_cfg);

  const double g = params.gamma_up, d = params.spacing;
  const double span = levels_per_class * d;
  const double h = g / 6.0;
  const double guard = 5.0 * g;
  std::vector<double> grid;
  for (double e = guard; e <= span - guard; e += h) grid.push_back(e);
  if (grid.size() < 32)
    throw config_error("simulate_time_power_spectrum: comb too short for the edge guard");

  // long lag range keeps the transform's time resolution well below 1/gamma;
  // the tail is tapered away below
  const double usable = grid.back() - grid.front();
  const double eps_max = std::min(30.0 * g, 0.45 * usable);
  if (eps_max < 10.0 * g)
    throw config_error("simulate_time_power_spectrum: comb span too short to resolve the decay");
  const int lags = static_cast<int>(eps_max / h);

  std::vector<cplx> acf_corr(static_cast<std::size_t>(lags) + 1, 0.0);
  std::vector<cplx> acf_base(static_cast<std::size_t>(lags) + 1, 0.0);
  const auto& k = kernels::ops();
  for (int r = 0; r < realizations; ++r) {
    for (int which = 0; which < 2; ++which) {
      const auto& model = which == 0 ? corr : base;
      auto& acf = which == 0 ? acf_corr : acf_base;
      const auto x = model.draw(r);
      const ComplexSeries s = model.series_for(x, 0, grid);
      for (int lag = 0; lag <= lags; ++lag)
        acf[static_cast<std::size_t>(lag)] +=
            k.ccorr_lag(s.re.data(), s.im.data(), s.re.data(), s.im.data(), grid.size(),
                        static_cast<std::size_t>(lag)) /
            static_cast<double>(grid.size() - static_cast<std::size_t>(lag));
    }
  }

  // Fourier transform of the two-sided autocorrelation at the requested
  // times. A Hann taper suppresses the ringing of the truncated Lorentzian
  // tail; it acts identically on the correlated and baseline combs, so the
  // ratio is unaffected beyond a mild smoothing.
  TimeSpectrumCheck out;
  out.t = t_grid;
  out.ratio.resize(t_grid.size());
  out.closed_form.resize(t_grid.size());
  for (std::size_t it = 0; it < t_grid.size(); ++it) {
    const double t = t_grid[it];
    if (t < 0.0) throw config_error("simulate_time_power_spectrum: t must be non-negative");
    double pc = 0.0, pb = 0.0;
    for (int lag = -lags; lag <= lags; ++lag) {
      const int a = std::abs(lag);
      cplx cc = acf_corr[static_cast<std::size_t>(a)];
      cplx cb = acf_base[static_cast<std::size_t>(a)];
      if (lag < 0) {
        cc = std::conj(cc);
        cb = std::conj(cb);
      }
      const double taper = 0.5 * (1.0 + std::cos(M_PI * a / (lags + 1.0)));
      // e^{+i eps t}: the correlation pole sits in the upper half plane
      const cplx phase = std::polar(taper, h * lag * t);
      pc += (cc * phase).real();
      pb += (cb * phase).real();
    }
    out.ratio[it] = pc / pb;
    out.closed_form[it] = 1.0 + std::exp(-params.g_same * t);
    out.max_rel_dev = std::max(out.max_rel_dev,
                               std::abs(out.ratio[it] - out.closed_form[it]) / out.closed_form[it]);
  }
  return out;
}

}  // namespace phasemem::smatrix
