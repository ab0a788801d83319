#include "phasemem/ddxkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "phasemem/errors.hpp"
#include "phasemem/legendre.hpp"

namespace phasemem::ddx {

std::vector<double> DdxDataset::emission_energies() const {
  std::vector<double> es;
  for (const auto& r : rows) {
    bool seen = false;
    for (double e : es)
      if (std::abs(e - r.e_out) < 1e-9) {
        seen = true;
        break;
      }
    if (!seen) es.push_back(r.e_out);
  }
  std::sort(es.begin(), es.end());
  return es;
}

std::vector<DdxRow> DdxDataset::at_energy(double e_out, double tol) const {
  std::vector<DdxRow> out;
  for (const auto& r : rows)
    if (std::abs(r.e_out - e_out) <= tol) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const DdxRow& a, const DdxRow& b) { return a.theta_deg < b.theta_deg; });
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw data_error("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" +
                     s + "'");
  }
}

}  // namespace

DdxDataset parse_ddx(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open DDX file: " + path);

  static const std::vector<std::string> kHeader = {"E_out_MeV", "theta_deg", "frame",
                                                   "ddx_mb_sr_MeV", "err_mb_sr_MeV"};
  DdxDataset ds;
  std::string line;
  int line_no = 0;
  int stage = 0;  // 0: expect E_in line, 1: expect column header, 2: rows
  std::map<std::pair<long long, long long>, int> seen;  // (E_out, theta) keys -> line

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      if (line.size() > 1 && ds.provenance.empty()) ds.provenance = line.substr(1);
      continue;
    }
    const auto cells = split_csv(line);
    if (stage == 0) {
      if (cells.size() != 2 || cells[0] != "E_in_MeV")
        throw data_error("line " + std::to_string(line_no) +
                         ": expected 'E_in_MeV,<value>' header, got '" + line + "'");
      ds.e_in = parse_number(cells[1], line_no, "beam energy");
      stage = 1;
      continue;
    }
    if (stage == 1) {
      if (cells.size() != kHeader.size())
        throw data_error("line " + std::to_string(line_no) + ": column header must have " +
                         std::to_string(kHeader.size()) + " fields");
      for (std::size_t i = 0; i < kHeader.size(); ++i)
        if (cells[i] != kHeader[i])
          throw data_error("line " + std::to_string(line_no) + ": column " +
                           std::to_string(i + 1) + " must be '" + kHeader[i] + "', got '" +
                           cells[i] + "'");
      stage = 2;
      continue;
    }
    if (cells.size() != kHeader.size())
      throw data_error("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(kHeader.size()) + " fields");
    DdxRow row;
    row.e_out = parse_number(cells[0], line_no, "E_out_MeV");
    row.theta_deg = parse_number(cells[1], line_no, "theta_deg");
    if (cells[2] == "lab")
      row.frame = Frame::lab;
    else if (cells[2] == "cm")
      row.frame = Frame::cm;
    else
      throw data_error("line " + std::to_string(line_no) + ": frame must be lab or cm, got '" +
                       cells[2] + "'");
    row.value = parse_number(cells[3], line_no, "ddx_mb_sr_MeV");
    row.err = parse_number(cells[4], line_no, "err_mb_sr_MeV");
    if (row.value < 0.0)
      throw data_error("line " + std::to_string(line_no) + ": negative cross section");
    if (row.err < 0.0)
      throw data_error("line " + std::to_string(line_no) + ": negative uncertainty");
    if (row.theta_deg < 0.0 || row.theta_deg > 180.0)
      throw data_error("line " + std::to_string(line_no) + ": theta outside [0, 180]");

    const auto key = std::make_pair(std::llround(row.e_out * 1e6), std::llround(row.theta_deg * 1e6));
    const auto [it, inserted] = seen.insert({key, line_no});
    if (!inserted)
      throw data_error("duplicate (E_out, theta) row: lines " + std::to_string(it->second) +
                       " and " + std::to_string(line_no));
    ds.rows.push_back(row);
  }
  if (stage != 2 || ds.rows.empty()) throw data_error(path + ": no data rows");
  return ds;
}

LegendreFit legendre_fit(const DdxDataset& ds, double e_out, int order) {
  if (order < 0) throw config_error("legendre_fit: order must be non-negative");
  const auto rows = ds.at_energy(e_out);
  const int m = static_cast<int>(rows.size());
  if (m < order + 1)
    throw config_error("legendre_fit: need at least order+1 angles at E_out, have " +
                       std::to_string(m));

  Eigen::MatrixXd design(m, order + 1);
  Eigen::VectorXd y(m), w(m);
  std::vector<double> p;
  for (int i = 0; i < m; ++i) {
    const double c = std::cos(rows[static_cast<std::size_t>(i)].theta_deg * M_PI / 180.0);
    legendre_all(order, c, p);
    for (int k = 0; k <= order; ++k) design(i, k) = p[static_cast<std::size_t>(k)];
    y(i) = rows[static_cast<std::size_t>(i)].value;
    const double sigma = rows[static_cast<std::size_t>(i)].err;
    w(i) = sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
  }

  const Eigen::MatrixXd wd = w.asDiagonal() * design;
  const Eigen::MatrixXd normal = design.transpose() * wd;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  if (!lu.isInvertible())
    throw model_error("legendre_fit: underdetermined system (rank-deficient angles)");
  LegendreFit fit;
  fit.covariance = lu.inverse();
  const Eigen::VectorXd a = fit.covariance * (design.transpose() * (w.asDiagonal() * y));
  fit.coeff.assign(a.data(), a.data() + a.size());
  const Eigen::VectorXd r = y - design * a;
  fit.chi2 = r.dot(w.asDiagonal() * r);
  fit.points = m;
  return fit;
}

namespace {

// interpolate the tabulated value linearly in cos(theta)
ValueWithError value_at_angle(const std::vector<DdxRow>& rows, double theta_deg) {
  for (const auto& r : rows)
    if (std::abs(r.theta_deg - theta_deg) < 1e-9) return {r.value, r.err, false};
  const double c = std::cos(theta_deg * M_PI / 180.0);
  const DdxRow* lo = nullptr;
  const DdxRow* hi = nullptr;
  for (const auto& r : rows) {
    const double rc = std::cos(r.theta_deg * M_PI / 180.0);
    if (rc <= c && (!lo || rc > std::cos(lo->theta_deg * M_PI / 180.0))) lo = &r;
    if (rc >= c && (!hi || rc < std::cos(hi->theta_deg * M_PI / 180.0))) hi = &r;
  }
  if (!lo || !hi) throw data_error("angle outside the tabulated range");
  const double cl = std::cos(lo->theta_deg * M_PI / 180.0);
  const double ch = std::cos(hi->theta_deg * M_PI / 180.0);
  if (std::abs(ch - cl) < 1e-12) return {lo->value, lo->err, false};
  const double wgt = (c - cl) / (ch - cl);
  return {(1.0 - wgt) * lo->value + wgt * hi->value, (1.0 - wgt) * lo->err + wgt * hi->err,
          false};
}

}  // namespace

ValueWithError fb_ratio(const DdxDataset& ds, double e_out, double theta_f, double theta_b) {
  const auto rows = ds.at_energy(e_out);
  if (rows.empty()) throw data_error("fb_ratio: no rows at the requested emission energy");
  const auto f = value_at_angle(rows, theta_f);
  const auto b = value_at_angle(rows, theta_b);
  ValueWithError out;
  if (b.value <= 0.0) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = f.value / b.value;
  const double rf = f.value > 0.0 ? f.err / f.value : 0.0;
  out.err = out.value * std::sqrt(rf * rf + (b.err / b.value) * (b.err / b.value));
  return out;
}

SymmetricBound symmetric_bound(const DdxDataset& ds, double e_out) {
  const auto rows = ds.at_energy(e_out);
  std::vector<DdxRow> backward;
  for (const auto& r : rows)
    if (r.theta_deg >= 90.0) backward.push_back(r);
  if (backward.size() < 2)
    throw data_error("symmetric_bound: no backward-hemisphere coverage at this energy");

  SymmetricBound sb;
  sb.constant_bound = std::numeric_limits<double>::infinity();
  for (const auto& r : backward) sb.constant_bound = std::min(sb.constant_bound, r.value + r.err);

  // even fit a0 + a2 P2 to the backward hemisphere, clamped so it never
  // exceeds value+err there
  {
    Eigen::MatrixXd design(static_cast<int>(backward.size()), 2);
    Eigen::VectorXd y(static_cast<int>(backward.size())), w(static_cast<int>(backward.size()));
    for (int i = 0; i < static_cast<int>(backward.size()); ++i) {
      const double c = std::cos(backward[static_cast<std::size_t>(i)].theta_deg * M_PI / 180.0);
      design(i, 0) = 1.0;
      design(i, 1) = legendre_p(2, c);
      y(i) = backward[static_cast<std::size_t>(i)].value;
      const double sigma = backward[static_cast<std::size_t>(i)].err;
      w(i) = sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
    }
    const Eigen::MatrixXd normal = design.transpose() * (w.asDiagonal() * design);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible()) throw model_error("symmetric_bound: degenerate backward fit");
    Eigen::VectorXd a = lu.inverse() * (design.transpose() * (w.asDiagonal() * y));
    // scale down until the even curve stays below data+err pointwise
    double scale = 1.0;
    for (int i = 0; i < static_cast<int>(backward.size()); ++i) {
      const double model = a(0) + a(1) * design(i, 1);
      const double cap = y(i) + backward[static_cast<std::size_t>(i)].err;
      if (model > cap && model > 0.0) scale = std::min(scale, cap / model);
    }
    a *= scale;
    sb.even_coeff = {a(0), a(1)};
    sb.even_angle_integrated = 4.0 * M_PI * a(0);  // P2 integrates to zero
  }

  sb.angle_integrated = 4.0 * M_PI * sb.constant_bound;

  // trapezoid of 2 pi sin(theta) * value over the tabulated angles
  double total = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t0 = rows[i - 1].theta_deg * M_PI / 180.0;
    const double t1 = rows[i].theta_deg * M_PI / 180.0;
    const double f0 = rows[i - 1].value * std::sin(t0);
    const double f1 = rows[i].value * std::sin(t1);
    total += 0.5 * (f0 + f1) * (t1 - t0);
  }
  sb.total_angle_integrated = 2.0 * M_PI * total;
  sb.share = sb.angle_integrated / sb.total_angle_integrated;
  return sb;
}

double ScalingParams::barrier() const {
  if (barrier_mev > 0.0) return barrier_mev;
  // pocket formula for the effective Coulomb barrier of the inverse capture
  return 1.44 * z_fragment * z / (1.2 * std::cbrt(static_cast<double>(a)) + 2.0);
}

double coulomb_penetration(double emission_mev, const ScalingParams& params) {
  if (!(emission_mev > 0.0)) throw config_error("coulomb_penetration: energy must be positive");
  const double x = 2.0 * M_PI * (params.barrier() - emission_mev) / params.hbar_omega_mev;
  // clamp to keep the factor strictly inside (0, 1]
  if (x > 700.0) return std::exp(-700.0);
  return 1.0 / (1.0 + std::exp(x));
}

TemperatureFit scale_spectrum_fit_t(const std::vector<double>& emission_mev,
                                    const std::vector<double>& spectrum,
                                    const std::vector<double>& err,
                                    const ScalingParams& params) {
  if (emission_mev.size() != spectrum.size())
    throw config_error("scale_spectrum_fit_t: energy/spectrum size mismatch");
  if (emission_mev.size() < 4)
    throw config_error("scale_spectrum_fit_t: need at least 4 energy points");

  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < emission_mev.size(); ++i) {
    const double eps = emission_mev[i];
    const double scale = eps * coulomb_penetration(eps, params);
    const double v = spectrum[i] / scale;
    if (!(v > 0.0))
      throw model_error("scale_spectrum_fit_t: non-positive scaled spectrum value");
    x.push_back(eps);
    y.push_back(std::log(v));
    const double rel = (i < err.size() && spectrum[i] > 0.0) ? err[i] / spectrum[i] : 0.0;
    w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
  }

  // weighted line fit on the log spectrum
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;

  TemperatureFit fit;
  if (std::abs(slope) < 1e-12) {
    fit.unbounded = true;
    fit.temperature = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.temperature = -1.0 / slope;
  // residual-scaled slope error propagated to T
  double chi2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    chi2 += w[i] * r * r;
  }
  const double dof = static_cast<double>(x.size()) - 2.0;
  const double slope_err = std::sqrt(std::max(chi2 / std::max(dof, 1.0), 1.0) / sxx);
  fit.err = slope_err / (slope * slope);
  return fit;
}

TemperatureFit scale_spectrum_fit_t(const DdxDataset& ds, const ScalingParams& params,
                                    double e_min, double e_max) {
  std::vector<double> es, spec, err;
  for (double e : ds.emission_energies()) {
    if (e < e_min || e > e_max) continue;
    const LegendreFit fit = legendre_fit(ds, e, 2);
    es.push_back(e);
    spec.push_back(4.0 * M_PI * fit.coeff[0]);
    err.push_back(4.0 * M_PI * std::sqrt(std::max(fit.covariance(0, 0), 0.0)));
  }
  return scale_spectrum_fit_t(es, spec, err, params);
}

DdxDataset lab_to_cm(const DdxDataset& ds, double frame_factor) {
  DdxDataset out = ds;
  bool any_lab = false;
  for (auto& r : out.rows) {
    if (r.frame != Frame::lab) continue;
    any_lab = true;
    if (r.theta_deg < 90.0) {
      r.value *= frame_factor;
      r.err *= frame_factor;
    }
    r.frame = Frame::cm;
  }
  if (!any_lab) return ds;  // already cm: no-op
  return out;
}

}  // namespace phasemem::ddx
