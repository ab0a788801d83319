#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "phasemem/smatrix.hpp"
#include "phasemem/stats.hpp"

namespace phasemem::observables {

/// Spinless partial-wave sum f(theta) = sum_J (2J+1) t^J P_J(cos theta).
std::complex<double> coherent_amplitude(const std::vector<int>& spins,
                                        const std::vector<std::complex<double>>& t_values,
                                        double theta_deg);

struct AngularDistribution {
  std::vector<double> theta_deg;
  std::vector<double> intensity;
  std::vector<double> err;
};

struct AngularConfig {
  smatrix::ModelParams params;
  std::vector<int> spins = {0, 1, 2, 3, 4};
  std::vector<double> theta_deg;
  int realizations = 1000;
  int energies_per_realization = 8;
  std::uint64_t seed = 0;
};

/// Ensemble-averaged intensity <|f(theta, E)|^2> with cross-spin terms
/// retained; errors from batch means over realizations.
AngularDistribution angular_distribution(const AngularConfig& cfg);

/// Closed-form mean intensity using the equal-energy cross-spin correlation
/// coefficients (rotating form when hbar_omega != 0).
std::vector<double> angular_distribution_mean(const smatrix::ModelParams& params,
                                              const std::vector<int>& spins,
                                              const std::vector<double>& theta_deg);

struct FbRatio {
  double value = 0.0;
  double err = 0.0;
  bool infinite = false;  // zero backward intensity
};

/// I(theta) / I(180 - theta) with propagated errors; linear interpolation on
/// the distribution grid when the angles are not tabulated.
FbRatio fb_asymmetry(const AngularDistribution& ad, double theta_deg);

struct ExcitationFunction {
  std::vector<double> energy;
  std::vector<double> intensity;
  int channels_summed = 1;
};

struct ExcitationConfig {
  smatrix::ModelParams params;
  std::vector<int> spins = {0, 1, 2};
  std::vector<double> beam_energies;
  double theta_deg = 30.0;
  int channels = 1;
  bool share_channel_draws = false;  // true = fully correlated exit channels
  std::uint64_t seed = 0;
};

/// Channel-summed intensity versus beam energy, one realization per channel
/// (or one shared realization when share_channel_draws is set).
ExcitationFunction excitation_function(const ExcitationConfig& cfg);

struct FluctuationStats {
  double normalized_variance = 0.0;
  std::vector<double> lag;       // energy lags
  std::vector<double> autocorr;  // normalized, autocorr[0] = normalized variance
  double fitted_width = 0.0;     // Lorentzian width of the autocorrelation
  bool has_period = false;
  double period = 0.0;           // dominant oscillation period (energy units)
  double period_significance = 0.0;
};

/// Normalized variance, autocorrelation, Lorentzian width fit and dominant
/// oscillation period of an excitation function. The period is reported only
/// when its spectral peak clears an extreme-value-calibrated threshold; the
/// significance is quoted in units of the null spread.
FluctuationStats fluctuation_analysis(const ExcitationFunction& ex);

struct ReproducibilityConfig {
  smatrix::ModelParams params;
  std::vector<int> spins = {0, 1, 2};
  std::vector<double> beam_energies;
  double counts_per_point = 1e4;
  double osc_amplitude = 0.15;  // surviving oscillation fraction when correlated
  bool correlated = false;      // channel-correlation regime
  std::uint64_t seed = 0;
};

struct ReproducibilityReport {
  double z_smooth = 0.0;  // smooth-component disagreement vs counting noise
  double z_osc = 0.0;     // oscillating-component disagreement vs counting noise
  double n_min = 0.0;
  bool correlated_regime = false;
  bool non_reproducible = false;  // correlated regime and z_osc > 3
  std::vector<double> run_a, run_b;
};

/// Compare two nominally identical measurements with different seeds. In the
/// channel-decorrelated regime the oscillating component self-averages away
/// and both runs agree to counting accuracy; in the correlated regime the
/// overlap signs are redrawn per run and the oscillating components disagree
/// while the smooth backgrounds match.
ReproducibilityReport reproducibility_experiment(const ReproducibilityConfig& cfg,
                                                 std::uint64_t seed_a, std::uint64_t seed_b);

}  // namespace phasemem::observables
