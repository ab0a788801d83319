#include "phasemem/microensemble.hpp"

#include <cmath>

#include "phasemem/errors.hpp"

namespace phasemem::micro {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int EnsembleConfig::total_dim() const {
  int n = 0;
  for (const auto& s : spins) n += s.count;
  return n;
}

void EnsembleConfig::validate() const {
  if (spins.empty()) throw config_error("ensemble: at least one spin class required");
  for (const auto& s : spins) s.validate();
  if (channels.size() < 2)
    throw config_error("ensemble: at least two channels required for off-diagonal studies");
  if (lambda_count < 1) throw config_error("ensemble: lambda_count must be >= 1");
}

EnsembleConfig EnsembleConfig::default_config() {
  EnsembleConfig cfg;
  for (int j = 0; j <= 4; ++j) cfg.spins.push_back({j, +1, 64, 1.0});
  return cfg;
}

Eigen::MatrixXd sample_orthogonal(int n, Rng& rng) {
  if (n < 1) throw config_error("sample_orthogonal: dimension must be >= 1");
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  MatrixXd r = qr.matrixQR();
  // fix the R-diagonal signs so the distribution is Haar
  for (int i = 0; i < n; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  return q;
}

Eigen::MatrixXd sample_orthonormal_rows(int rows, int dim, Rng& rng) {
  if (rows < 1 || dim < rows) throw config_error("sample_orthonormal_rows: need 1 <= rows <= dim");
  MatrixXd g(dim, rows);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rows; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = MatrixXd(qr.householderQ()).leftCols(rows);
  return q.transpose();
}

KCorrelation build_k_correlation(const EnsembleConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = cfg.total_dim();
  KCorrelation kc;
  kc.k = MatrixXd::Zero(n, n);

  std::vector<int> offsets;
  int off = 0;
  for (const auto& s : cfg.spins) {
    offsets.push_back(off);
    off += s.count;
  }
  // spin off-diagonal blocks: +-1/sqrt(class size) with fair random signs
  for (std::size_t a = 0; a < cfg.spins.size(); ++a) {
    for (std::size_t b = a + 1; b < cfg.spins.size(); ++b) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.spins[a].count));
      for (int i = 0; i < cfg.spins[a].count; ++i)
        for (int j = 0; j < cfg.spins[b].count; ++j) {
          const double v = (rng.next() & 1ULL) ? scale : -scale;
          kc.k(offsets[a] + i, offsets[b] + j) = v;
          kc.k(offsets[b] + j, offsets[a] + i) = v;
        }
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(kc.k);
  if (es.info() != Eigen::Success) throw model_error("K-matrix eigensolve failed");
  kc.t = es.eigenvectors();
  kc.eigenvalues = es.eigenvalues();
  return kc;
}

KCorrelation build_k_correlation(const EnsembleConfig& cfg) {
  Rng rng(cfg.seed ^ 0xabcdef12345ULL);
  return build_k_correlation(cfg, rng);
}

int AmplitudeEnsemble::row_offset(int cls) const {
  int off = 0;
  for (int c = 0; c < cls; ++c) off += cfg.spins[static_cast<std::size_t>(c)].count;
  return off;
}

double AmplitudeEnsemble::gamma_at(int cls, int level, int channel) const {
  return gamma(row_offset(cls) + level, channel);
}

Eigen::MatrixXd sample_eta(const EnsembleConfig& cfg, const KCorrelation& k, Rng& rng) {
  const int n = cfg.total_dim();
  const int nch = static_cast<int>(cfg.channels.size());

  // mode-space channel covariance: identity plus kappa * r_i on every
  // channel pair, sampled through the symmetric square root per mode
  double max_abs_r = 0.0;
  for (int i = 0; i < n; ++i) max_abs_r = std::max(max_abs_r, std::abs(k.eigenvalues(i)));
  if (std::abs(cfg.kappa) * max_abs_r >= 1.0)
    throw model_error("sample_eta: |kappa| * max|r_i| >= 1, channel covariance not realizable");

  MatrixXd eta(n, nch);
  for (int i = 0; i < n; ++i) {
    const double kr = cfg.kappa * k.eigenvalues(i);
    if (kr == 0.0) {
      for (int c = 0; c < nch; ++c) eta(i, c) = rng.normal();
      continue;
    }
    // covariance I + kr * ones; eigenvalues 1 (multiplicity nch-1) and 1 + kr*nch
    const double lam = 1.0 + kr * nch;
    if (lam < 0.0)
      throw model_error("sample_eta: requested channel covariance is not positive semidefinite");
    // sqrt(I + kr*11^T) = I + ((sqrt(lam) - 1)/nch) * 11^T
    const double alpha = (std::sqrt(lam) - 1.0) / nch;
    double sum = 0.0;
    VectorXd z(nch);
    for (int c = 0; c < nch; ++c) {
      z(c) = rng.normal();
      sum += z(c);
    }
    for (int c = 0; c < nch; ++c) eta(i, c) = z(c) + alpha * sum;
  }
  return eta;
}

AmplitudeEnsemble build_gamma(const EnsembleConfig& cfg, const KCorrelation& k,
                              const std::vector<levels::LevelSequence>& seqs, Rng& rng) {
  cfg.validate();
  if (seqs.size() != cfg.spins.size())
    throw config_error("build_gamma: one level sequence per spin class required");
  const int n = cfg.total_dim();
  const int nch = static_cast<int>(cfg.channels.size());

  AmplitudeEnsemble ens;
  ens.cfg = cfg;
  ens.level_seqs = seqs;
  ens.eta = sample_eta(cfg, k, rng);

  // global orthogonal basis: block-diagonal class transformations composed
  // with the K eigenbasis
  MatrixXd b = MatrixXd::Zero(n, n);
  int off = 0;
  for (const auto& s : cfg.spins) {
    b.block(off, off, s.count, s.count) = sample_orthogonal(s.count, rng);
    off += s.count;
  }
  ens.c = b * k.t;

  ens.gamma = ens.c * ens.eta;
  // unit mean square per (class, channel)
  off = 0;
  for (const auto& s : cfg.spins) {
    for (int c = 0; c < nch; ++c) {
      const double ms = ens.gamma.col(c).segment(off, s.count).squaredNorm() / s.count;
      if (ms <= 0.0) throw model_error("build_gamma: degenerate amplitude draw");
      ens.gamma.col(c).segment(off, s.count) /= std::sqrt(ms);
    }
    off += s.count;
  }
  return ens;
}

stats::Estimate quadruple_correlator(const EnsembleConfig& cfg, levels::SpacingModel model,
                                     const QuadrupleSpec& spec, int realizations) {
  cfg.validate();
  if (realizations < 1) throw config_error("quadruple_correlator: realizations must be >= 1");
  const int ncls = static_cast<int>(cfg.spins.size());
  if (spec.class_a < 0 || spec.class_a >= ncls || spec.class_b < 0 || spec.class_b >= ncls)
    throw config_error("quadruple_correlator: class index out of range");

  Rng root(cfg.seed);
  stats::Running acc;
  for (int r = 0; r < realizations; ++r) {
    Rng rng = root.fork(static_cast<std::uint64_t>(r));
    std::vector<levels::LevelSequence> seqs;
    seqs.reserve(cfg.spins.size());
    for (std::size_t c = 0; c < cfg.spins.size(); ++c)
      seqs.push_back(levels::generate_levels(cfg.spins[c], model,
                                             cfg.seed + 1000003ULL * (r + 1) + 17ULL * c));
    KCorrelation k = build_k_correlation(cfg, rng);
    AmplitudeEnsemble ens = build_gamma(cfg, k, seqs, rng);

    const auto pairs = levels::pair_bins(seqs[static_cast<std::size_t>(spec.class_a)],
                                         seqs[static_cast<std::size_t>(spec.class_b)],
                                         spec.r, spec.window);
    if (pairs.empty())
      throw config_error("quadruple_correlator: empty level-pair bin at the requested r");
    for (const auto& [mu, nu] : pairs) {
      if (spec.class_a == spec.class_b && mu == nu && spec.r != 0.0) continue;
      acc.add(ens.gamma_at(spec.class_a, mu, spec.chan_a) *
              ens.gamma_at(spec.class_a, mu, spec.chan_b) *
              ens.gamma_at(spec.class_b, nu, spec.chan_a2) *
              ens.gamma_at(spec.class_b, nu, spec.chan_b2));
    }
  }
  return stats::to_estimate(acc);
}

namespace {

// A_ij = (e_i f_j + e_j f_i) / 2 is a symmetrized rank-two outer product, so
// quadratic forms in A_ij^2 reduce to O(n) contractions:
//   sum_ij x_i y_j A_ij^2 = [ (x.e2)(y.f2) + (x.f2)(y.e2) + 2 (x.ef)(y.ef) ] / 4
// with e2 = e*e, f2 = f*f, ef = e*f elementwise.
struct QuadForm {
  VectorXd e2, f2, ef;
  explicit QuadForm(const VectorXd& e, const VectorXd& f)
      : e2(e.cwiseProduct(e)), f2(f.cwiseProduct(f)), ef(e.cwiseProduct(f)) {}
  double operator()(const VectorXd& x, const VectorXd& y) const {
    return 0.25 * (x.dot(e2) * y.dot(f2) + x.dot(f2) * y.dot(e2) + 2.0 * x.dot(ef) * y.dot(ef));
  }
};

}  // namespace

LambdaQ lambda_q_estimator(const AmplitudeEnsemble& ens, int class_mu, int mu, int class_nu,
                           int nu, int lambda_count, Rng& rng) {
  const int n = ens.cfg.total_dim();
  if (lambda_count < 1) throw config_error("lambda_q_estimator: lambda_count must be >= 1");
  const VectorXd e = ens.eta.col(0);
  const VectorXd f = ens.eta.col(1);
  if (e.cwiseAbs().maxCoeff() == 0.0 || f.cwiseAbs().maxCoeff() == 0.0)
    throw model_error("lambda_q_estimator: degenerate (all-zero) channel draw");

  const VectorXd cm = ens.c.row(ens.row_offset(class_mu) + mu);
  const VectorXd cn = ens.c.row(ens.row_offset(class_nu) + nu);

  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      a(i, j) = 0.5 * (e(i) * f(j) + e(j) * f(i));
      a(j, i) = a(i, j);
    }

  LambdaQ out;
  const VectorXd mn = cm.cwiseProduct(cn);
  // closed-form mask average of the quadratic form
  {
    QuadForm q(e, f);
    out.direct = 2.0 * q(mn, mn);
  }

  // lambda loop: masked quadratic form and the partition average of squared
  // overlaps of the rescaled mixed states
  stats::Running mc_acc, k_acc;
  const double sqrt2 = std::sqrt(2.0);
  MatrixXd al(n, n);
  for (int l = 0; l < lambda_count; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double w = (i == j) ? sqrt2 * rng.normal() : rng.normal();
        const double mask = (i == j) ? w / sqrt2 : w;
        al(i, j) = a(i, j) * mask;
        al(j, i) = al(i, j);
      }
    }
    double form = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) form += mn(i) * mn(j) * al(i, j) * al(i, j);
    mc_acc.add(2.0 * form);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(al);
    if (es.info() != Eigen::Success) throw model_error("lambda mask eigensolve failed");
    const MatrixXd& u = es.eigenvectors();
    // q_k = N * sum_i cm_i cn_i U_ik^2 ; contribution (1/N) sum_k q_k^2
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      double qk = 0.0;
      for (int i = 0; i < n; ++i) qk += mn(i) * u(i, k) * u(i, k);
      qk *= n;
      sum += qk * qk;
    }
    k_acc.add(sum / n);
  }
  out.masked_mc = mc_acc.mean();
  out.masked_mc_err = mc_acc.stderr_mean();
  out.k_avg = k_acc.mean();
  out.k_avg_err = k_acc.stderr_mean();
  return out;
}

stats::Estimate sum_rule_same_spin(int levels_per_class, int realizations, std::uint64_t seed) {
  if (levels_per_class < 2) throw config_error("sum_rule_same_spin: need >= 2 levels");
  if (realizations < 1) throw config_error("sum_rule_same_spin: realizations must be >= 1");
  const int n = levels_per_class;
  Rng root(seed);
  stats::Running acc;
  VectorXd b(n), e(n), f(n);
  for (int r = 0; r < realizations; ++r) {
    Rng rng = root.fork(static_cast<std::uint64_t>(r));
    for (int i = 0; i < n; ++i) {
      b(i) = rng.normal();
      e(i) = rng.normal();
      f(i) = rng.normal();
    }
    b.normalize();  // one row of a within-class orthogonal basis
    // Summing the rectified quadruple over the class partners contracts the
    // partner rows to completeness:
    //   sum_{nu != mu} = 2 sum_i b_i^2 A_ii^2 - 2 sum_ij b_i^2 b_j^2 A_ij^2
    const VectorXd b2 = b.cwiseProduct(b);
    double s1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double aii = e(i) * f(i);
      s1 += b2(i) * aii * aii;
    }
    QuadForm q(e, f);
    acc.add(2.0 * s1 - 2.0 * q(b2, b2));
  }
  return stats::to_estimate(acc);
}

stats::Estimate sum_rule_cross_spin(int levels_per_class, int realizations, std::uint64_t seed) {
  if (levels_per_class < 2) throw config_error("sum_rule_cross_spin: need >= 2 levels");
  if (realizations < 1) throw config_error("sum_rule_cross_spin: realizations must be >= 1");
  const int n = levels_per_class;
  Rng root(seed);
  stats::Running acc;
  VectorXd m(n), e(n), f(n);
  for (int r = 0; r < realizations; ++r) {
    Rng rng = root.fork(static_cast<std::uint64_t>(r));
    for (int i = 0; i < n; ++i) {
      m(i) = rng.normal();
      e(i) = rng.normal();
      f(i) = rng.normal();
    }
    m.normalize();
    // The partner class realizes an independent orthogonal transformation of
    // the same space. Summed over its complete set of states, the partner
    // rows contract to the identity and the masked-average closed form leaves
    //   sum_nu Q_mu_nu = sum_i m_i^2 A_ii^2 .
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      const double aii = e(i) * f(i);
      v += m(i) * m(i) * aii * aii;
    }
    acc.add(v);
  }
  return stats::to_estimate(acc);
}

OverlapScaling overlap_scaling_check(const std::vector<int>& n_values, int trials,
                                     std::uint64_t seed) {
  if (trials < 1) throw config_error("overlap_scaling_check: trials must be >= 1");
  OverlapScaling out;
  Rng root(seed);
  std::vector<double> logn, logm;
  for (std::size_t vi = 0; vi < n_values.size(); ++vi) {
    const int n = n_values[vi];
    if (n < 32) throw config_error("overlap_scaling_check: dimensions must be >= 32");
    const int cls = n / 4;  // one class of N/4 states for the class-sum check
    Rng rng = root.fork(vi);
    stats::Running sq, cls_sum;
    for (int t = 0; t < trials; ++t) {
      // mean squared overlap of rows of independent orthogonal blocks:
      // two independent uniform unit vectors suffice
      VectorXd u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u(i) = rng.normal();
        v(i) = rng.normal();
      }
      u.normalize();
      const MatrixXd block = sample_orthonormal_rows(cls, n, rng);
      v.normalize();
      const double ov = u.dot(v);
      sq.add(ov * ov);
      cls_sum.add((block * u).squaredNorm());
    }
    out.rows.push_back({n, sq.mean(), cls_sum.mean()});
    logn.push_back(std::log(static_cast<double>(n)));
    logm.push_back(std::log(sq.mean()));
  }
  out.loglog_slope = stats::fit_line(logn, logm).slope;

  // cross-partition products of the rescaled-state overlaps average to zero
  // for distinct states
  {
    const int n = 64;
    Rng rng = root.fork(0x5eedULL);
    stats::Running cross;
    for (int t = 0; t < trials; ++t) {
      const MatrixXd c = sample_orthogonal(n, rng);
      const MatrixXd u = sample_orthogonal(n, rng);
      const VectorXd mn = VectorXd(c.row(0)).cwiseProduct(VectorXd(c.row(1)));
      VectorXd q(n);
      for (int k = 0; k < n; ++k) {
        double qk = 0.0;
        for (int i = 0; i < n; ++i) qk += mn(i) * u(i, k) * u(i, k);
        q(k) = n * qk;
      }
      for (int k = 1; k < n; ++k) cross.add(q(k) * q(k - 1));
    }
    out.cross_k_mean = cross.mean();
    out.cross_k_err = cross.stderr_mean();
  }
  return out;
}

}  // namespace phasemem::micro
