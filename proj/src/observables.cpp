#include "phasemem/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phasemem/errors.hpp"
#include "phasemem/legendre.hpp"
#include "phasemem/parallel.hpp"
#include "phasemem/rng.hpp"

namespace phasemem::observables {

using cplx = std::complex<double>;

std::complex<double> coherent_amplitude(const std::vector<int>& spins,
                                        const std::vector<cplx>& t_values, double theta_deg) {
  if (spins.size() != t_values.size())
    throw config_error("coherent_amplitude: one amplitude per spin required");
  for (int j : spins)
    if (j < 0 || j > 20) throw config_error("coherent_amplitude: spin out of range 0..20");
  const double c = std::cos(theta_deg * M_PI / 180.0);
  cplx f = 0.0;
  for (std::size_t i = 0; i < spins.size(); ++i)
    f += static_cast<double>(2 * spins[i] + 1) * t_values[i] * legendre_p(spins[i], c);
  return f;
}

AngularDistribution angular_distribution(const AngularConfig& cfg) {
  if (cfg.realizations < 100)
    throw config_error("angular_distribution: need >= 100 realizations");
  if (cfg.theta_deg.empty()) throw config_error("angular_distribution: empty angle grid");

  // sparse, well-separated sample energies; each is an independent look at
  // the stationary process
  smatrix::ProcessConfig pc;
  pc.params = cfg.params;
  pc.spins = cfg.spins;
  pc.series_grid = false;
  const double step = 25.0 * cfg.params.gamma_up;
  for (int i = 0; i < cfg.energies_per_realization; ++i) pc.grid.push_back(i * step);
  pc.seed = cfg.seed;
  smatrix::CorrelatedProcess proc(pc);

  const std::size_t nth = cfg.theta_deg.size();
  const int batches = 32;
  // realizations are independent work units; each worker fills private batch
  // accumulators keyed by the realization index, merged in chunk order
  const int workers = parallel::threads();
  const int chunks = parallel::chunk_count(cfg.realizations, workers);
  std::vector<std::vector<double>> chunk_sums(
      static_cast<std::size_t>(chunks),
      std::vector<double>(nth * static_cast<std::size_t>(batches), 0.0));
  std::vector<std::vector<double>> chunk_counts(
      static_cast<std::size_t>(chunks), std::vector<double>(static_cast<std::size_t>(batches), 0.0));

  parallel::for_chunks(cfg.realizations, workers, [&](int chunk, int begin, int end) {
    auto& sums = chunk_sums[static_cast<std::size_t>(chunk)];
    auto& cnts = chunk_counts[static_cast<std::size_t>(chunk)];
    std::vector<cplx> tvals(cfg.spins.size());
    for (int r = begin; r < end; ++r) {
      const auto real = proc.draw(r);
      const int b = r % batches;
      for (std::size_t g = 0; g < pc.grid.size(); ++g) {
        for (std::size_t c = 0; c < cfg.spins.size(); ++c) tvals[c] = real.series[c].at(g);
        for (std::size_t th = 0; th < nth; ++th) {
          const cplx f = coherent_amplitude(cfg.spins, tvals, cfg.theta_deg[th]);
          sums[th * static_cast<std::size_t>(batches) + static_cast<std::size_t>(b)] +=
              std::norm(f);
        }
        cnts[static_cast<std::size_t>(b)] += 1.0;
      }
    }
  });

  AngularDistribution ad;
  ad.theta_deg = cfg.theta_deg;
  ad.intensity.resize(nth);
  ad.err.resize(nth);
  for (std::size_t th = 0; th < nth; ++th) {
    stats::Running r;
    for (int b = 0; b < batches; ++b) {
      double sum = 0.0, count = 0.0;
      for (int chunk = 0; chunk < chunks; ++chunk) {
        sum += chunk_sums[static_cast<std::size_t>(chunk)]
                         [th * static_cast<std::size_t>(batches) + static_cast<std::size_t>(b)];
        count += chunk_counts[static_cast<std::size_t>(chunk)][static_cast<std::size_t>(b)];
      }
      r.add(sum / count);
    }
    ad.intensity[th] = r.mean();
    ad.err[th] = r.stderr_mean();
  }
  return ad;
}

std::vector<double> angular_distribution_mean(const smatrix::ModelParams& params,
                                              const std::vector<int>& spins,
                                              const std::vector<double>& theta_deg) {
  // <|f|^2> = sum_J w_J^2 P_J^2 + 2 sum_{J<K} w_J w_K P_J P_K Re rho_JK,
  // unit single-class intensity
  std::vector<double> out(theta_deg.size(), 0.0);
  for (std::size_t th = 0; th < theta_deg.size(); ++th) {
    const double c = std::cos(theta_deg[th] * M_PI / 180.0);
    double acc = 0.0;
    for (std::size_t a = 0; a < spins.size(); ++a) {
      const double wa = 2.0 * spins[a] + 1.0;
      const double pa = legendre_p(spins[a], c);
      acc += wa * wa * pa * pa;
      for (std::size_t b = a + 1; b < spins.size(); ++b) {
        const double wb = 2.0 * spins[b] + 1.0;
        const double pb = legendre_p(spins[b], c);
        const cplx rho = params.hbar_omega != 0.0
                             ? smatrix::rotating_correlation(params, spins[a], spins[b])
                             : cplx(smatrix::cross_spin_correlation(params, spins[a], spins[b]), 0.0);
        acc += 2.0 * wa * wb * pa * pb * rho.real();
      }
    }
    out[th] = acc;
  }
  return out;
}

namespace {

// linear interpolation on the angle grid
double interp_ad(const AngularDistribution& ad, double theta, double* err) {
  const auto& th = ad.theta_deg;
  if (theta <= th.front()) {
    if (err) *err = ad.err.front();
    return ad.intensity.front();
  }
  if (theta >= th.back()) {
    if (err) *err = ad.err.back();
    return ad.intensity.back();
  }
  const auto it = std::upper_bound(th.begin(), th.end(), theta);
  const std::size_t i = static_cast<std::size_t>(it - th.begin());
  const double w = (theta - th[i - 1]) / (th[i] - th[i - 1]);
  if (err) *err = (1.0 - w) * ad.err[i - 1] + w * ad.err[i];
  return (1.0 - w) * ad.intensity[i - 1] + w * ad.intensity[i];
}

}  // namespace

FbRatio fb_asymmetry(const AngularDistribution& ad, double theta_deg) {
  if (ad.theta_deg.empty()) throw config_error("fb_asymmetry: empty distribution");
  double ef = 0.0, eb = 0.0;
  const double fwd = interp_ad(ad, theta_deg, &ef);
  const double bwd = interp_ad(ad, 180.0 - theta_deg, &eb);
  FbRatio r;
  if (bwd <= 0.0) {
    r.infinite = true;
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  r.value = fwd / bwd;
  const double rf = fwd > 0.0 ? ef / fwd : 0.0;
  r.err = r.value * std::sqrt(rf * rf + (eb / bwd) * (eb / bwd));
  return r;
}

ExcitationFunction excitation_function(const ExcitationConfig& cfg) {
  if (cfg.channels < 1) throw config_error("excitation_function: need >= 1 channel");
  if (cfg.beam_energies.size() < 2)
    throw config_error("excitation_function: need an energy grid");

  smatrix::ProcessConfig pc;
  pc.params = cfg.params;
  pc.spins = cfg.spins;
  pc.grid = cfg.beam_energies;
  pc.series_grid = true;

  ExcitationFunction ex;
  ex.energy = cfg.beam_energies;
  ex.intensity.assign(cfg.beam_energies.size(), 0.0);
  ex.channels_summed = cfg.channels;

  std::vector<cplx> tvals(cfg.spins.size());
  for (int ch = 0; ch < cfg.channels; ++ch) {
    pc.seed = cfg.share_channel_draws ? cfg.seed : cfg.seed + 1 + static_cast<std::uint64_t>(ch);
    smatrix::CorrelatedProcess proc(pc);
    const auto real = proc.draw(0);
    for (std::size_t g = 0; g < ex.energy.size(); ++g) {
      for (std::size_t c = 0; c < cfg.spins.size(); ++c) tvals[c] = real.series[c].at(g);
      ex.intensity[g] += std::norm(coherent_amplitude(cfg.spins, tvals, cfg.theta_deg));
    }
  }
  return ex;
}

FluctuationStats fluctuation_analysis(const ExcitationFunction& ex) {
  const std::size_t n = ex.intensity.size();
  if (n < 64) throw config_error("fluctuation_analysis: need >= 64 energy points");
  double mean = 0.0;
  for (double v : ex.intensity) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : ex.intensity) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0 || mean == 0.0)
    throw model_error("fluctuation_analysis: constant series");

  FluctuationStats st;
  st.normalized_variance = var / (mean * mean);

  const double h = ex.energy[1] - ex.energy[0];
  const std::size_t max_lag = n / 3;
  st.lag.resize(max_lag + 1);
  st.autocorr.resize(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      acc += (ex.intensity[i] - mean) * (ex.intensity[i + lag] - mean);
    st.lag[lag] = static_cast<double>(lag) * h;
    st.autocorr[lag] = acc / (static_cast<double>(n - lag) * mean * mean);
  }

  // one-parameter Lorentzian fit of the normalized autocorrelation,
  // C(eps) = C(0) / (1 + (eps/w)^2), by golden-section on log w
  {
    const double c0 = st.autocorr[0];
    auto loss = [&](double w) {
      double s = 0.0;
      for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        const double model = c0 / (1.0 + (st.lag[lag] / w) * (st.lag[lag] / w));
        const double d = st.autocorr[lag] - model;
        s += d * d;
      }
      return s;
    };
    double lo = std::log(0.25 * h), hi = std::log(st.lag.back());
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = loss(std::exp(x1)), f2 = loss(std::exp(x2));
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = loss(std::exp(x1));
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = loss(std::exp(x2));
      }
    }
    st.fitted_width = std::exp(0.5 * (a + b));
  }

  // dominant oscillation period via the power spectrum of the mean-subtracted
  // series. Correlated series have red spectra, so each bin is whitened by a
  // local baseline (windowed mean with the bin neighborhood excluded); the
  // whitened peak must clear a Gumbel-calibrated threshold for the maximum of
  // an exponential null.
  {
    const double span = ex.energy.back() - ex.energy.front();
    const std::size_t nt = n;  // conjugate-variable resolution ~ 2 pi / span
    std::vector<double> power(nt, 0.0);
    for (std::size_t j = 2; j < nt; ++j) {
      const double t = 2.0 * M_PI * static_cast<double>(j) / (2.0 * span);
      cplx acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += (ex.intensity[i] - mean) * std::polar(1.0, ex.energy[i] * t);
      power[j] = std::norm(acc);
    }
    const std::size_t win = std::max<std::size_t>(10, nt / 24);
    auto local_baseline = [&](std::size_t j) {
      double s = 0.0;
      std::size_t m = 0;
      const std::size_t lo = j > win ? j - win : 2;
      const std::size_t hi = std::min(nt - 1, j + win);
      for (std::size_t k = lo; k <= hi; ++k) {
        if (k + 2 >= j && k <= j + 2) continue;  // exclude the line itself
        s += power[k];
        ++m;
      }
      return m ? s / static_cast<double>(m) : power[j];
    };
    double best = 0.0;
    std::size_t peak = 0;
    std::size_t trials = 0;
    for (std::size_t j = 3; j + 3 < nt; ++j) {
      ++trials;
      const double r = power[j] / local_baseline(j);
      if (r > best) {
        best = r;
        peak = j;
      }
    }
    // max of `trials` unit exponentials sits at ln(trials) with Gumbel spread
    const double z = best - std::log(static_cast<double>(trials));
    st.period_significance = z / (M_PI / std::sqrt(6.0));
    if (st.period_significance > 3.0 && peak > 0) {
      // parabolic refinement on log power
      double tpk = 2.0 * M_PI * static_cast<double>(peak) / (2.0 * span);
      if (peak > 1 && peak + 1 < nt) {
        const double la = std::log(power[peak - 1]), lb = std::log(power[peak]),
                     lc = std::log(power[peak + 1]);
        const double den = la - 2.0 * lb + lc;
        if (den < 0.0) {
          const double shift = 0.5 * (la - lc) / den;
          tpk = 2.0 * M_PI * (static_cast<double>(peak) + shift) / (2.0 * span);
        }
      }
      st.has_period = true;
      st.period = 2.0 * M_PI / tpk;
    }
  }
  return st;
}

namespace {

// sharp band split: projection onto the Fourier modes 0..j_cut; the smooth
// and oscillating components are exactly orthogonal
std::vector<double> lowpass(const std::vector<double>& v, std::size_t j_cut) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j <= j_cut; ++j) {
    double ac = 0.0, as = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = 2.0 * M_PI * static_cast<double>(j) * static_cast<double>(i) /
                           static_cast<double>(n);
      ac += v[i] * std::cos(phase);
      as += v[i] * std::sin(phase);
    }
    const double norm = (j == 0) ? 1.0 / n : 2.0 / n;
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = 2.0 * M_PI * static_cast<double>(j) * static_cast<double>(i) /
                           static_cast<double>(n);
      out[i] += norm * (ac * std::cos(phase) + as * std::sin(phase));
    }
  }
  return out;
}

}  // namespace

ReproducibilityReport reproducibility_experiment(const ReproducibilityConfig& cfg,
                                                 std::uint64_t seed_a, std::uint64_t seed_b) {
  if (cfg.beam_energies.size() < 64)
    throw config_error("reproducibility_experiment: need >= 64 energy points");
  if (!(cfg.counts_per_point > 1.0))
    throw config_error("reproducibility_experiment: counts_per_point must exceed 1");

  const std::size_t n = cfg.beam_energies.size();
  const std::vector<double> mean_curve =
      angular_distribution_mean(cfg.params, cfg.spins, {30.0});
  // smooth background: flat mean intensity shaped by a broad evaporation-like
  // envelope over the scanned window
  std::vector<double> smooth(n);
  const double e0 = cfg.beam_energies.front();
  const double span = cfg.beam_energies.back() - e0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (cfg.beam_energies[i] - e0) / span;
    smooth[i] = mean_curve[0] * (1.0 + 0.25 * x - 0.35 * x * x);
  }

  const std::size_t j_cut = std::max<std::size_t>(4, n / 128);

  auto run = [&](std::uint64_t seed) {
    std::vector<double> measured(n);
    Rng rng(seed);
    std::vector<double> osc(n, 0.0);
    if (cfg.correlated) {
      // one shared-channel draw provides the oscillating pattern whose signs
      // are indeterminate between runs; it lives strictly above the smooth
      // band so the background is common to both runs by construction
      ExcitationConfig exc;
      exc.params = cfg.params;
      exc.spins = cfg.spins;
      exc.beam_energies = cfg.beam_energies;
      exc.channels = 1;
      exc.seed = seed;
      const ExcitationFunction ex = excitation_function(exc);
      double m = 0.0;
      for (double v : ex.intensity) m += v;
      m /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) osc[i] = ex.intensity[i] / m - 1.0;
      const auto low = lowpass(osc, j_cut);
      double rms = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        osc[i] -= low[i];
        rms += osc[i] * osc[i];
      }
      rms = std::sqrt(rms / static_cast<double>(n));
      for (auto& v : osc) v *= cfg.osc_amplitude / rms;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = cfg.counts_per_point * (1.0 + osc[i]) * smooth[i] / smooth[0];
      measured[i] = (expected + std::sqrt(expected) * rng.normal()) / cfg.counts_per_point;
    }
    return measured;
  };

  ReproducibilityReport rep;
  rep.correlated_regime = cfg.correlated;
  rep.n_min = cfg.counts_per_point;
  rep.run_a = run(seed_a);
  rep.run_b = run(seed_b);

  const auto sa = lowpass(rep.run_a, j_cut);
  const auto sb = lowpass(rep.run_b, j_cut);
  const double sigma = 1.0 / std::sqrt(cfg.counts_per_point);  // relative counting noise
  // the band projections are orthogonal, so the counting chi-squares carry
  // (2 j_cut + 1) and n - (2 j_cut + 1) degrees of freedom respectively
  const double dof_s = static_cast<double>(2 * j_cut + 1);
  const double dof_o = static_cast<double>(n) - dof_s;
  double chi_s = 0.0, chi_o = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = sa[i] - sb[i];
    const double dosc = (rep.run_a[i] - sa[i]) - (rep.run_b[i] - sb[i]);
    chi_s += ds * ds / (2.0 * sigma * sigma);
    chi_o += dosc * dosc / (2.0 * sigma * sigma);
  }
  rep.z_smooth = (chi_s - dof_s) / std::sqrt(2.0 * dof_s);
  rep.z_osc = (chi_o - dof_o) / std::sqrt(2.0 * dof_o);
  rep.non_reproducible = cfg.correlated && rep.z_osc > 3.0;
  return rep;
}

}  // namespace phasemem::observables
