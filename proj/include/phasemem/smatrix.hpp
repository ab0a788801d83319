#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "phasemem/levels.hpp"
#include "phasemem/microensemble.hpp"
#include "phasemem/rng.hpp"
#include "phasemem/stats.hpp"

namespace phasemem::smatrix {

/// Physical widths of the decaying compound system, hbar = 1 throughout;
/// all widths share one arbitrary energy unit.
struct ModelParams {
  double gamma_up = 1.0;    // total decay width
  double beta = 0.0;        // cross-symmetry phase relaxation width
  double g_same = 0.0;      // same-spin phase relaxation width
  double gamma_spr = 0.0;   // spreading width; 0 means unspecified
  double hbar_omega = 0.0;  // rotation quantum of the coherently rotating complex
  double spacing = 1.0;     // mean level spacing D

  void validate() const;
  double overlap_ratio() const { return gamma_up / spacing; }
  bool overlapping() const { return overlap_ratio() > 1.0; }
  /// True when a spreading width was supplied but does not dominate the decay
  /// width; callers should warn in that case.
  bool weak_spreading_separation() const {
    return gamma_spr > 0.0 && gamma_spr < 10.0 * gamma_up;
  }
};

struct ChannelPair {
  std::string entrance = "a";
  std::string exit = "b";
  int l_in = 0, j_in = 0;
  int l_out = 0, j_out = 0;
  bool elastic() const { return entrance == exit; }
};

/// Numerator convention of the pole sum.
///   reaction         - entrance-channel coupling times exit-channel coupling
///   compound_elastic - independent formation coupling (channel "G") times
///                      the entrance coupling; mean numerator vanishes
///   direct_elastic   - coupling squared minus its unit mean
enum class NumeratorMode { reaction, compound_elastic, direct_elastic };

struct ComplexSeries {
  std::vector<double> re, im;
  std::size_t size() const { return re.size(); }
  std::complex<double> at(std::size_t i) const { return {re[i], im[i]}; }
};

/// Complex t(E) per spin class on a common energy grid, one channel pair.
struct TMatrixSeries {
  std::vector<double> grid;
  std::vector<int> spins;
  std::vector<ComplexSeries> values;  // indexed like spins
};

/// Pole expansion t(E) = sum_mu num_mu / (E - E_mu + i gamma_up / 2),
/// one series per spin class of the ensemble.
TMatrixSeries evaluate_t(const std::vector<levels::LevelSequence>& seqs,
                         const micro::AmplitudeEnsemble& ens, const ChannelPair& pair,
                         const ModelParams& params, const std::vector<double>& grid,
                         NumeratorMode mode = NumeratorMode::reaction);

/// Single-class pole sum from explicit numerators (building block and test
/// surface for the enumerated variants above).
ComplexSeries pole_series(const std::vector<double>& level_energies,
                          const std::vector<double>& numerators, double gamma_up,
                          const std::vector<double>& grid);

/// Windowed grid averages of tA * conj(tB) plus the individual means.
struct PairAverage {
  std::complex<double> mean_ab;
  std::complex<double> mean_a;
  std::complex<double> mean_b;
  std::size_t points = 0;
};

PairAverage energy_average_pair(const std::vector<double>& grid, const ComplexSeries& a,
                                const ComplexSeries& b, double window,
                                const ModelParams& params);

/// Equal-energy correlation coefficient between amplitudes of spins J and J':
/// gamma_up / (gamma_up + beta |J - J'|).
double cross_spin_correlation(const ModelParams& params, int j_a, int j_b);

/// Companion time law exp(-beta |J - J'| t).
double cross_spin_time_law(const ModelParams& params, int j_a, int j_b, double t);

/// Same-spin intensity enhancement 1 + gamma_up / (gamma_up + g_same).
double spin_diag_enhancement(const ModelParams& params);

/// Closed-form time power spectrum
/// P(t) = [G(G+g)/(2G+g)] exp(-G t) (1 + exp(-g t)), G = gamma_up, g = g_same.
std::vector<double> time_power_spectrum(const ModelParams& params,
                                        const std::vector<double>& t_grid);

/// Rotating-complex equal-energy correlation
/// gamma_up / (gamma_up + beta |dJ| + i hbar_omega (J - J')).
std::complex<double> rotating_correlation(const ModelParams& params, int j_a, int j_b);

/// Rotating time law exp(-beta |dJ| t) exp(i (J' - J) hbar_omega t).
std::complex<double> rotating_time_law(const ModelParams& params, int j_a, int j_b, double t);

// ---------------------------------------------------------------------------
// Phenomenological generator: complex Gaussian amplitude processes with a
// Lorentzian energy autocorrelation of width gamma_up and cross-spin
// correlations matching the closed-form laws. Realized on a time lattice:
// each time step draws one channel vector across the spin classes with the
// target instantaneous correlation matrix, and the energy series is the
// phase sum over the lattice under the decay envelope.
// ---------------------------------------------------------------------------

struct ProcessConfig {
  ModelParams params;
  std::vector<int> spins = {0, 1};
  std::vector<double> grid;   // energies at which series are evaluated
  bool series_grid = true;    // grid resolves the envelope (spacing <= gamma_up/5);
                              // false = sparse sampling at arbitrary energies
  int time_steps = 0;         // 0 = choose from the grid span and gamma_up
  double time_horizon = 8.0;  // in units of 1/gamma_up
  std::uint64_t seed = 0;
};

struct ProcessRealization {
  // envelope-weighted time coefficients per class
  std::vector<std::vector<std::complex<double>>> time_coeff;
  // grid evaluation per class (empty when the config grid is empty)
  std::vector<ComplexSeries> series;
};

class CorrelatedProcess {
 public:
  explicit CorrelatedProcess(ProcessConfig cfg);

  const std::vector<double>& times() const { return times_; }
  const ProcessConfig& config() const { return cfg_; }

  /// Deterministic for fixed (config seed, realization index).
  ProcessRealization draw(int realization) const;

 private:
  ProcessConfig cfg_;
  std::vector<double> times_;
  std::vector<double> envelope_;
  // mixing_[m] is the factor L with L L^H = rho(t_m), column-major n x n
  std::vector<std::vector<std::complex<double>>> mixing_;
  // cos/sin phase tables, [m][grid]
  std::vector<std::vector<double>> wave_re_, wave_im_;
  Rng root_;
};

// ---------------------------------------------------------------------------
// Micro route: pole combs whose numerators carry prescribed pair
// correlations, Lorentzian in the level-energy distance. Used for the
// dual-route checks of the closed-form laws above.
// ---------------------------------------------------------------------------

struct PoleModelConfig {
  ModelParams params;
  std::vector<int> spins = {0, 1};
  int levels_per_class = 128;
  bool circulant = false;  // periodic level distance (kills comb-edge bias)
  std::uint64_t seed = 0;
};

class CorrelatedPoleModel {
 public:
  explicit CorrelatedPoleModel(PoleModelConfig cfg);

  const std::vector<double>& level_energies() const { return energies_; }
  const PoleModelConfig& config() const { return cfg_; }

  /// Numerators x[class][level], deterministic per (seed, realization).
  std::vector<std::vector<double>> draw(int realization) const;

  /// Pole series for one class of a drawn realization.
  ComplexSeries series_for(const std::vector<std::vector<double>>& draw_result, int cls,
                           const std::vector<double>& grid) const;

 private:
  PoleModelConfig cfg_;
  std::vector<double> energies_;
  Eigen::MatrixXd factor_;  // factor * N(0,1)^n has the target covariance
  Rng root_;
};

/// Sample equal-energy cross-spin correlation of the micro pole route,
/// measured at interior energies. Converges to cross_spin_correlation().
stats::Estimate pole_cross_spin_correlation(const PoleModelConfig& cfg, int realizations,
                                            int energies_per_realization);

/// Monte Carlo time power spectrum with the correlation-free baseline divided
/// out: ratio(t) = P_sim(t) / P_baseline(t), target 1 + exp(-g_same t).
struct TimeSpectrumCheck {
  std::vector<double> t;
  std::vector<double> ratio;
  std::vector<double> closed_form;
  double max_rel_dev = 0.0;
};

TimeSpectrumCheck simulate_time_power_spectrum(const ModelParams& params, int levels_per_class,
                                               int realizations, std::uint64_t seed,
                                               const std::vector<double>& t_grid);

}  // namespace phasemem::smatrix
