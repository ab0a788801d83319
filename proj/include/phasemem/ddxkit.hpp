#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace phasemem::ddx {

enum class Frame { lab, cm };

struct DdxRow {
  double e_out = 0.0;     // MeV
  double theta_deg = 0.0; // degrees
  Frame frame = Frame::lab;
  double value = 0.0;     // mb / (sr MeV)
  double err = 0.0;       // mb / (sr MeV)
};

/// Double-differential emission spectrum table for one beam energy.
struct DdxDataset {
  double e_in = 0.0;  // MeV
  std::vector<DdxRow> rows;
  std::string provenance;

  /// Distinct emission energies, ascending.
  std::vector<double> emission_energies() const;
  /// Rows at one emission energy, ascending in angle.
  std::vector<DdxRow> at_energy(double e_out, double tol = 1e-9) const;
};

/// Parse the DDX CSV schema:
///   # comment lines anywhere
///   E_in_MeV,<value>
///   E_out_MeV,theta_deg,frame,ddx_mb_sr_MeV,err_mb_sr_MeV
///   <rows...>
/// Malformed headers and duplicate (E_out, theta) rows are rejected with the
/// offending line numbers.
DdxDataset parse_ddx(const std::string& path);

struct LegendreFit {
  std::vector<double> coeff;  // a_0 .. a_order
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int points = 0;
};

/// Weighted least-squares fit of sum_k a_k P_k(cos theta) at one emission
/// energy. Requires at least order+1 distinct angles.
LegendreFit legendre_fit(const DdxDataset& ds, double e_out, int order);

struct ValueWithError {
  double value = 0.0;
  double err = 0.0;
  bool infinite = false;
};

/// value(theta_f) / value(theta_b) with relative errors added in quadrature;
/// linear interpolation in cos(theta) when an angle is not tabulated.
ValueWithError fb_ratio(const DdxDataset& ds, double e_out, double theta_f, double theta_b);

struct SymmetricBound {
  double constant_bound = 0.0;       // min over backward hemisphere of value+err
  std::vector<double> even_coeff;    // a0, a2 fitted to the backward hemisphere
  double angle_integrated = 0.0;     // 2 pi integral of the constant bound, mb/MeV
  double even_angle_integrated = 0.0;
  double total_angle_integrated = 0.0;  // trapezoid over the data
  double share = 0.0;                // constant-bound share of the total
};

/// Upper bounds for the 90-degree-symmetric component from backward-hemisphere
/// data: a constant level and an even Legendre combination a0 + a2 P2.
SymmetricBound symmetric_bound(const DdxDataset& ds, double e_out);

struct ScalingParams {
  int z = 82;               // residual charge
  int a = 208;              // residual mass number
  int z_fragment = 1;       // emitted-particle charge
  double barrier_mev = 0.0; // 0 = use the default parametrization
  double hbar_omega_mev = 4.0;
  int exciton_number = 2;
  double frame_factor = 1.125;

  double barrier() const;
};

/// Inverted-parabola barrier transmission, monotone in the emission energy,
/// in (0, 1]; equals 1/2 at the barrier top.
double coulomb_penetration(double emission_mev, const ScalingParams& params);

struct TemperatureFit {
  double temperature = 0.0;  // MeV
  double err = 0.0;
  bool unbounded = false;    // flat scaled spectrum
};

/// Divide the angle-integrated spectrum by eps * P_coul(eps) and fit the
/// log-linear slope: T = -1/slope.
TemperatureFit scale_spectrum_fit_t(const std::vector<double>& emission_mev,
                                    const std::vector<double>& spectrum,
                                    const std::vector<double>& err,
                                    const ScalingParams& params);

/// Angle-integrated spectrum from the a0 Legendre coefficient per emission
/// energy: sigma(E) = 4 pi a0.
TemperatureFit scale_spectrum_fit_t(const DdxDataset& ds, const ScalingParams& params,
                                    double e_min, double e_max);

/// Forward-hemisphere intensities scaled by the lab-to-cm factor; approximate
/// single-parameter frame transformation.
DdxDataset lab_to_cm(const DdxDataset& ds, double frame_factor);

}  // namespace phasemem::ddx
