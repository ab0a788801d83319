#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "phasemem/rng.hpp"

namespace phasemem::density {

/// Discretized coordinate space: `points` equal-measure cells covering total
/// volume `volume`. Dimensionality only enters through the cell count.
struct GridConfig {
  int points = 4096;
  double volume = 1.0;

  double cell() const { return volume / points; }
  void validate() const;
};

/// Real wavefunction sampled on the grid, normalized to unit L2 measure.
struct GridWavefunction {
  GridConfig grid;
  std::vector<double> values;
  int spin = 0;
  int index = 0;
  int parity = +1;

  double norm_sq() const;
};

/// Unit-normalized Gaussian random field on the grid.
GridWavefunction gaussian_field(const GridConfig& grid, Rng& rng);

void normalize(GridWavefunction& phi);

/// Effective integration volume V = 3 / integral(phi^4).
double effective_volume(const GridWavefunction& phi);

/// Residual of the exact partition identity for rescaled-state overlaps:
/// | mean_k q_k^2 + (1/N) sum_{k != k'} q_k q_k' - N (c_mu . c_nu)^2 |
/// with q_k = N sum_i c_mu_i c_nu_i U_ik^2. Exact for any orthogonal inputs.
double scaled_overlap_identity(const Eigen::VectorXd& c_mu, const Eigen::VectorXd& c_nu,
                               const Eigen::MatrixXd& u);

/// Volume-mean intensity correlator L = V * integral(phi_a^2 phi_b^2) - 1,
/// with V the geometric mean of the two effective volumes (keeps the
/// correlator symmetric and L(phi, phi) = 2 exact for the self pair).
double intensity_correlator(const GridWavefunction& a, const GridWavefunction& b);

/// Pair of normalized fields whose measured intensity correlator equals the
/// target q (|q| <= 0.2 so the construction stays near-Gaussian).
std::pair<GridWavefunction, GridWavefunction> synth_correlated_fields(const GridConfig& grid,
                                                                      double q,
                                                                      std::uint64_t seed);

/// One component of a compound wave packet.
struct PacketComponent {
  int spin = 0;
  int index = 0;
  int parity = +1;
  double amplitude = 0.0;  // gamma weight
  double energy = 0.0;
};

struct CompoundWavePacket {
  std::vector<PacketComponent> components;
  double normalization() const;  // c with sum |c gamma|^2 = 1
};

/// Pairwise intensity-correlator model L[(i, j)] for packet components.
using LModel = Eigen::MatrixXd;

/// Closed-form L model built from the Lorentzian pair-correlation laws:
/// same-spin same-index 2 (self pair), same-spin distinct
/// (D g / pi)/(r^2 + g^2), cross-spin (D b |dJ| / pi)/(r^2 + (b |dJ|)^2).
LModel lorentzian_l_model(const CompoundWavePacket& packet, double spacing, double beta,
                          double g_same);

/// Time-dependent density-fluctuation correlator of the packet: quadruple sum
/// with the three pair contractions of L and the parity selection rule
/// (spatially odd quadruples drop out).
double density_fluctuation_correlator(const CompoundWavePacket& packet, const LModel& l,
                                      double t1, double t2);

/// Coarse-graining probe: block-average the intensities over shrinking cell
/// groups; the product statistic converges to 1 + L as the blocks approach
/// single cells.
struct NeedleProbeRow {
  int block_cells = 0;
  double product_mean = 0.0;
};

std::vector<NeedleProbeRow> needle_probe(const GridWavefunction& a, const GridWavefunction& b,
                                         const std::vector<int>& block_sizes);

}  // namespace phasemem::density
