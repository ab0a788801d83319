#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "phasemem/levels.hpp"
#include "phasemem/rng.hpp"
#include "phasemem/stats.hpp"

namespace phasemem::micro {

/// Configuration of the finite-N amplitude ensemble. N = sum of class sizes
/// is the total Hilbert dimension; kappa is the cross-symmetry correlation
/// strength between the underlying Gaussian couplings (0 is the hard limit).
struct EnsembleConfig {
  std::vector<levels::SpinClass> spins;
  std::vector<std::string> channels = {"a", "b"};
  double kappa = 0.0;
  std::uint64_t seed = 0;
  int lambda_count = 200;

  int total_dim() const;
  void validate() const;

  /// Five classes J = 0..4, 64 levels each, unit spacing.
  static EnsembleConfig default_config();
};

/// Cross-symmetry coupling-correlation matrix and its eigensystem. Entries
/// are +-1/sqrt(levels-per-class) with fair random signs on the spin
/// off-diagonal blocks; the within-class blocks are zero. The orthogonal
/// eigenbasis (columns of t) is the mode basis in which the channel vectors
/// decorrelate mode by mode.
struct KCorrelation {
  Eigen::MatrixXd k;
  Eigen::MatrixXd t;            // columns are eigenvectors
  Eigen::VectorXd eigenvalues;  // r_i, trace-free
};

KCorrelation build_k_correlation(const EnsembleConfig& cfg, Rng& rng);
KCorrelation build_k_correlation(const EnsembleConfig& cfg);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// R-diagonal signs fixed.
Eigen::MatrixXd sample_orthogonal(int n, Rng& rng);

/// Gaussian matrix rows orthonormalized: `rows` orthonormal vectors in R^dim,
/// distributed as a slice of a Haar orthogonal matrix.
Eigen::MatrixXd sample_orthonormal_rows(int rows, int dim, Rng& rng);

/// Correlated partial-width amplitudes gamma[(class row), channel] together
/// with the basis data that produced them. Rows of c are grouped by spin
/// class and are globally orthonormal.
struct AmplitudeEnsemble {
  EnsembleConfig cfg;
  std::vector<levels::LevelSequence> level_seqs;
  Eigen::MatrixXd c;      // N x N orthogonal, rows grouped by class
  Eigen::MatrixXd eta;    // N x channels, mode-diagonal channel covariance
  Eigen::MatrixXd gamma;  // N x channels, unit mean square per (class, channel)

  int row_offset(int cls) const;
  int class_count() const { return static_cast<int>(cfg.spins.size()); }
  double gamma_at(int cls, int level, int channel) const;
};

/// Channel vectors with the mode-diagonal covariance: unit variance plus
/// kappa * r_i on every channel pair of mode i. Throws model_error when the
/// requested covariance is not realizable.
Eigen::MatrixXd sample_eta(const EnsembleConfig& cfg, const KCorrelation& k, Rng& rng);

AmplitudeEnsemble build_gamma(const EnsembleConfig& cfg, const KCorrelation& k,
                              const std::vector<levels::LevelSequence>& seqs, Rng& rng);

/// One (J,a,b) x (J',a',b') quadruple-product request at level-pair distance r.
struct QuadrupleSpec {
  int class_a = 0;
  int chan_a = 0, chan_b = 1;
  int class_b = 1;
  int chan_a2 = 0, chan_b2 = 1;
  double r = 0.0;
  double window = 2.5;  // in energy units; the conventional choice is 2.5 D
};

/// Plain Monte Carlo average of gamma_mu^a gamma_mu^b gamma_nu^a' gamma_nu^b'
/// over binned level pairs and fresh ensemble realizations.
stats::Estimate quadruple_correlator(const EnsembleConfig& cfg, levels::SpacingModel model,
                                     const QuadrupleSpec& spec, int realizations);

/// Pair-resolved intensity correlator between resonances (class_mu, mu) and
/// (class_nu, nu), with the averaging routes exposed separately:
///   masked_mc - Monte Carlo over `lambda_count` mask draws of the quadratic
///               form in the masked coupling-product matrix;
///   direct    - its closed-form mask average, 2 sum_ij c c c c A_ij^2;
///   k_avg     - mean over the eigenbasis partition of squared overlaps of
///               the rescaled mixed states, then over the mask draws.
struct LambdaQ {
  double masked_mc = 0.0;
  double masked_mc_err = 0.0;
  double direct = 0.0;
  double k_avg = 0.0;
  double k_avg_err = 0.0;
};

LambdaQ lambda_q_estimator(const AmplitudeEnsemble& ens, int class_mu, int mu, int class_nu,
                           int nu, int lambda_count, Rng& rng);

/// Same-spin normalization sum: sum over partner levels of the rectified
/// quadruple product, within one spin class of `levels_per_class` states.
/// Converges to 1 - O(1/levels_per_class).
stats::Estimate sum_rule_same_spin(int levels_per_class, int realizations, std::uint64_t seed);

/// Cross-spin normalization sum: the partner class spans the same space
/// through an independent orthogonal transformation and the masked-average
/// closed form is summed over all of its states. Converges to 1.
stats::Estimate sum_rule_cross_spin(int levels_per_class, int realizations, std::uint64_t seed);

/// Orthogonality-violation scaling of eigenstates modeled as rows of
/// independent orthogonal blocks embedded at dimension N.
struct OverlapScalingRow {
  int dim = 0;
  double mean_sq_overlap = 0.0;  // expect (1+Q)/N with Q ~ 0
  double sum_rule = 0.0;         // sum over one class, expect ~ class_size/N
};

struct OverlapScaling {
  std::vector<OverlapScalingRow> rows;
  double loglog_slope = 0.0;   // expect -1
  double cross_k_mean = 0.0;   // cross-partition overlap product, expect 0
  double cross_k_err = 0.0;
};

OverlapScaling overlap_scaling_check(const std::vector<int>& n_values, int trials,
                                     std::uint64_t seed);

}  // namespace phasemem::micro
