#include "phasemem/density.hpp"

#include <cmath>
#include <complex>

#include "phasemem/errors.hpp"
#include "phasemem/kernels.hpp"

namespace phasemem::density {

void GridConfig::validate() const {
  if (points < 64) throw config_error("grid: need at least 64 cells");
  if (!(volume > 0.0)) throw config_error("grid: volume must be positive");
}

double GridWavefunction::norm_sq() const {
  return kernels::ops().sum_sq(values.data(), values.size()) * grid.cell();
}

GridWavefunction gaussian_field(const GridConfig& grid, Rng& rng) {
  grid.validate();
  GridWavefunction phi;
  phi.grid = grid;
  phi.values.resize(static_cast<std::size_t>(grid.points));
  for (auto& v : phi.values) v = rng.normal();
  normalize(phi);
  return phi;
}

void normalize(GridWavefunction& phi) {
  const double n2 = phi.norm_sq();
  if (!(n2 > 0.0)) throw model_error("wavefunction normalization: zero function");
  const double s = 1.0 / std::sqrt(n2);
  for (auto& v : phi.values) v *= s;
}

double effective_volume(const GridWavefunction& phi) {
  const double p4 = kernels::ops().sum_p4(phi.values.data(), phi.values.size()) * phi.grid.cell();
  if (!(p4 > 0.0)) throw model_error("effective_volume: zero function");
  return 3.0 / p4;
}

double scaled_overlap_identity(const Eigen::VectorXd& c_mu, const Eigen::VectorXd& c_nu,
                               const Eigen::MatrixXd& u) {
  const int n = static_cast<int>(u.rows());
  if (c_mu.size() != n || c_nu.size() != n || u.cols() != n)
    throw config_error("scaled_overlap_identity: dimension mismatch");
  const Eigen::VectorXd mn = c_mu.cwiseProduct(c_nu);
  Eigen::VectorXd q(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += mn(i) * u(i, k) * u(i, k);
    q(k) = n * acc;
  }
  const double mean_q2 = q.squaredNorm() / n;
  const double sum_q = q.sum();
  const double cross = (sum_q * sum_q - q.squaredNorm()) / n;
  const double overlap = mn.sum();
  return std::abs(mean_q2 + cross - static_cast<double>(n) * overlap * overlap);
}

double intensity_correlator(const GridWavefunction& a, const GridWavefunction& b) {
  if (a.grid.points != b.grid.points || a.grid.volume != b.grid.volume)
    throw config_error("intensity_correlator: fields live on different grids");
  const double v = std::sqrt(effective_volume(a) * effective_volume(b));
  const double i22 =
      kernels::ops().sum_sq_prod(a.values.data(), b.values.data(), a.values.size()) *
      a.grid.cell();
  return v * i22 - 1.0;
}

std::pair<GridWavefunction, GridWavefunction> synth_correlated_fields(const GridConfig& grid,
                                                                      double q,
                                                                      std::uint64_t seed) {
  grid.validate();
  if (q < 0.0 || q > 0.2)
    throw model_error("synth_correlated_fields: target q must lie in [0, 0.2]");
  // joint-Gaussian mixing with amplitude correlation alpha gives intensity
  // correlation 2 alpha^2
  const double alpha = std::sqrt(0.5 * q);
  Rng rng(seed);
  GridWavefunction a = gaussian_field(grid, rng);
  GridWavefunction b;
  b.grid = grid;
  b.values.resize(static_cast<std::size_t>(grid.points));
  const double beta = std::sqrt(1.0 - alpha * alpha);
  for (std::size_t i = 0; i < b.values.size(); ++i)
    b.values[i] = alpha * a.values[i] + beta * rng.normal();
  normalize(b);
  return {std::move(a), std::move(b)};
}

double CompoundWavePacket::normalization() const {
  double s = 0.0;
  for (const auto& c : components) s += c.amplitude * c.amplitude;
  if (!(s > 0.0)) throw model_error("wave packet: zero norm");
  return 1.0 / std::sqrt(s);
}

LModel lorentzian_l_model(const CompoundWavePacket& packet, double spacing, double beta,
                          double g_same) {
  const int n = static_cast<int>(packet.components.size());
  LModel l(n, n);
  auto lorentz = [spacing](double r, double width) {
    return width > 0.0 ? (1.0 / M_PI) * spacing * width / (r * r + width * width) : 0.0;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& a = packet.components[static_cast<std::size_t>(i)];
      const auto& b = packet.components[static_cast<std::size_t>(j)];
      const double r = a.energy - b.energy;
      if (a.spin == b.spin && a.index == b.index)
        l(i, j) = 2.0;  // Gaussian self pair
      else if (a.spin == b.spin)
        l(i, j) = lorentz(r, g_same);
      else
        l(i, j) = lorentz(r, beta * std::abs(a.spin - b.spin));
    }
  }
  return l;
}

double density_fluctuation_correlator(const CompoundWavePacket& packet, const LModel& l,
                                      double t1, double t2) {
  const int n = static_cast<int>(packet.components.size());
  if (n < 2) throw config_error("density_fluctuation_correlator: need >= 2 components");
  if (l.rows() != n || l.cols() != n)
    throw model_error("density_fluctuation_correlator: L model size mismatch");
  const double c = packet.normalization();
  const double c2 = c * c;

  std::complex<double> acc = 0.0;
  for (int i1 = 0; i1 < n; ++i1) {
    const auto& p1 = packet.components[static_cast<std::size_t>(i1)];
    for (int i2 = 0; i2 < n; ++i2) {
      const auto& p2 = packet.components[static_cast<std::size_t>(i2)];
      for (int i3 = 0; i3 < n; ++i3) {
        const auto& p3 = packet.components[static_cast<std::size_t>(i3)];
        for (int i4 = 0; i4 < n; ++i4) {
          const auto& p4 = packet.components[static_cast<std::size_t>(i4)];
          // spatially odd quadruples vanish
          if (p1.parity * p2.parity * p3.parity * p4.parity < 0) continue;
          const double pairing = l(i1, i2) * l(i3, i4) + l(i1, i3) * l(i2, i4) +
                                 l(i1, i4) * l(i2, i3);
          if (pairing == 0.0) continue;
          const double g = p1.amplitude * p2.amplitude * p3.amplitude * p4.amplitude;
          const double phase = (p2.energy - p1.energy) * t1 + (p4.energy - p3.energy) * t2;
          acc += c2 * g * pairing * std::polar(1.0, phase);
        }
      }
    }
  }
  return acc.real();
}

std::vector<NeedleProbeRow> needle_probe(const GridWavefunction& a, const GridWavefunction& b,
                                         const std::vector<int>& block_sizes) {
  if (a.grid.points != b.grid.points)
    throw config_error("needle_probe: fields live on different grids");
  const double v = std::sqrt(effective_volume(a) * effective_volume(b));
  const int n = a.grid.points;
  std::vector<NeedleProbeRow> rows;
  for (int bs : block_sizes) {
    if (bs < 1) throw config_error("needle_probe: probe volume below the grid resolution");
    if (bs > n) throw config_error("needle_probe: probe volume exceeds the grid");
    const int blocks = n / bs;
    double acc = 0.0;
    for (int bl = 0; bl < blocks; ++bl) {
      double ia = 0.0, ib = 0.0;
      for (int k = 0; k < bs; ++k) {
        const auto idx = static_cast<std::size_t>(bl * bs + k);
        ia += a.values[idx] * a.values[idx];
        ib += b.values[idx] * b.values[idx];
      }
      // block-mean intensities, scaled by the effective volume
      ia /= bs;
      ib /= bs;
      acc += (v * ia) * (v * ib);
    }
    rows.push_back({bs, acc / blocks});
  }
  return rows;
}

}  // namespace phasemem::density
