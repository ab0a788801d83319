#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "phasemem/density.hpp"
#include "phasemem/errors.hpp"
#include "phasemem/microensemble.hpp"
#include "phasemem/rng.hpp"
#include "phasemem/stats.hpp"

using namespace phasemem;

namespace {

micro::EnsembleConfig small_config(int classes, int per_class, double kappa = 0.0) {
  micro::EnsembleConfig cfg;
  cfg.spins.clear();
  for (int j = 0; j < classes; ++j) cfg.spins.push_back({j, +1, per_class, 1.0});
  cfg.kappa = kappa;
  return cfg;
}

std::vector<levels::LevelSequence> picket_levels(const micro::EnsembleConfig& cfg,
                                                 std::uint64_t seed) {
  std::vector<levels::LevelSequence> seqs;
  for (std::size_t c = 0; c < cfg.spins.size(); ++c)
    seqs.push_back(levels::generate_levels(cfg.spins[c], levels::SpacingModel::picket,
                                           seed + 13 * c));
  return seqs;
}

}  // namespace

TEST_CASE("sample_orthogonal: dimension one gives a sign") {
  Rng rng(1);
  int plus = 0;
  for (int i = 0; i < 200; ++i) {
    const auto q = micro::sample_orthogonal(1, rng);
    CHECK(std::abs(std::abs(q(0, 0)) - 1.0) < 1e-15);
    if (q(0, 0) > 0) ++plus;
  }
  CHECK(plus > 50);
  CHECK(plus < 150);
  CHECK_THROWS_AS(micro::sample_orthogonal(0, rng), config_error);
}

TEST_CASE("sample_orthogonal: orthogonality to 1e-12 per element") {
  Rng rng(2);
  const auto q = micro::sample_orthogonal(64, rng);
  const Eigen::MatrixXd dev = q.transpose() * q - Eigen::MatrixXd::Identity(64, 64);
  CHECK(dev.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample_orthogonal: Haar first-entry moment matches the sphere oracle") {
  Rng rng(3);
  stats::Running q11, oracle;
  for (int i = 0; i < 1000; ++i) {
    const auto q = micro::sample_orthogonal(64, rng);
    q11.add(q(0, 0) * q(0, 0));
    // oracle: first component of a normalized Gaussian vector
    Eigen::VectorXd v(64);
    for (int k = 0; k < 64; ++k) v(k) = rng.normal();
    v.normalize();
    oracle.add(v(0) * v(0));
  }
  CHECK(std::abs(q11.mean() - 1.0 / 64) < 0.1 / 64);
  CHECK(std::abs(oracle.mean() - 1.0 / 64) < 0.1 / 64);
}

TEST_CASE("K-correlation: trace-free spectrum with the documented scale") {
  auto cfg = small_config(4, 64);  // N = 256
  cfg.seed = 5;
  const auto k = micro::build_k_correlation(cfg);
  const int n = cfg.total_dim();
  REQUIRE(k.eigenvalues.size() == n);

  double mean_r = 0.0, mean_r2 = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_r += k.eigenvalues(i);
    mean_r2 += k.eigenvalues(i) * k.eigenvalues(i);
  }
  mean_r /= n;
  mean_r2 /= n;
  CHECK(std::abs(mean_r) < 3.0 * std::sqrt(mean_r2) / std::sqrt(static_cast<double>(n)));
  // mean r^2 within a factor 2 of J_max = N / levels-per-class = 4
  CHECK(mean_r2 > 2.0);
  CHECK(mean_r2 < 8.0);
  // eigenbasis orthogonal
  const Eigen::MatrixXd dev =
      k.t.transpose() * k.t - Eigen::MatrixXd::Identity(n, n);
  CHECK(dev.cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("build_gamma: kappa = 0 leaves classes uncorrelated") {
  auto cfg = small_config(2, 32);
  cfg.seed = 8;
  const auto seqs = picket_levels(cfg, 8);
  Rng rng(8);
  stats::Running cross;
  for (int r = 0; r < 300; ++r) {
    const auto k = micro::build_k_correlation(cfg, rng);
    const auto ens = micro::build_gamma(cfg, k, seqs, rng);
    for (int mu = 0; mu < 32; ++mu) cross.add(ens.gamma_at(0, mu, 0) * ens.gamma_at(1, mu, 0));
  }
  CHECK(std::abs(cross.mean()) < 3.0 * cross.stderr_mean());
}

TEST_CASE("build_gamma: per-class unit mean square is enforced exactly") {
  auto cfg = small_config(3, 24, 0.001);
  cfg.seed = 9;
  const auto seqs = picket_levels(cfg, 9);
  Rng rng(9);
  const auto k = micro::build_k_correlation(cfg, rng);
  const auto ens = micro::build_gamma(cfg, k, seqs, rng);
  for (int c = 0; c < 3; ++c) {
    for (int ch = 0; ch < 2; ++ch) {
      double ms = 0.0;
      for (int mu = 0; mu < 24; ++mu) {
        const double g = ens.gamma_at(c, mu, ch);
        ms += g * g;
      }
      CHECK(ms / 24 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // rows of the global basis stay orthonormal
  const int n = cfg.total_dim();
  const Eigen::MatrixXd dev = ens.c * ens.c.transpose() - Eigen::MatrixXd::Identity(n, n);
  CHECK(dev.cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("sample_eta: cross-channel mode moments follow kappa r_i") {
  // covariance of the channel vectors per eigenmode: kappa r_i off-diagonal
  auto cfg = small_config(4, 64, 0.001);  // N = 256
  cfg.seed = 10;
  Rng rng(10);
  const auto k = micro::build_k_correlation(cfg, rng);
  const int n = cfg.total_dim();

  auto pooled_slope = [&](double kappa, int draws, double* sigma_out) {
    auto c = cfg;
    c.kappa = kappa;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    Rng draw_rng(99);
    for (int d = 0; d < draws; ++d) {
      const auto eta = micro::sample_eta(c, k, draw_rng);
      for (int i = 0; i < n; ++i) acc(i) += eta(i, 0) * eta(i, 1);
    }
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      num += (acc(i) / draws) * k.eigenvalues(i);
      den += k.eigenvalues(i) * k.eigenvalues(i);
    }
    *sigma_out = 1.0 / std::sqrt(static_cast<double>(draws) * den);
    return num / den;
  };

  // consistency at the configured kappa over 1e4 realizations
  double sigma = 0.0;
  const double slope = pooled_slope(0.001, 10000, &sigma);
  CHECK(std::abs(slope - 0.001) < 3.0 * sigma);
  // positive control: a larger kappa is resolved far above noise
  const double strong = pooled_slope(0.02, 10000, &sigma);
  CHECK(std::abs(strong - 0.02) < 3.0 * sigma);
  CHECK(strong > 10.0 * sigma);
}

TEST_CASE("build_gamma rejects unrealizable channel covariances") {
  auto cfg = small_config(2, 32, 1.0);  // |kappa| max|r| >= 1
  cfg.seed = 11;
  Rng rng(11);
  const auto k = micro::build_k_correlation(cfg, rng);
  const auto seqs = picket_levels(cfg, 11);
  CHECK_THROWS_AS(micro::build_gamma(cfg, k, seqs, rng), model_error);
}

TEST_CASE("quadruple correlator: cross-class product vanishes in the hard limit") {
  auto cfg = small_config(2, 32);
  cfg.seed = 12;
  micro::QuadrupleSpec spec;
  spec.class_a = 0;
  spec.class_b = 1;
  spec.window = 2.5;
  // the pair-distance profile M(r) is measured, not assumed; in the hard
  // limit it is flat zero
  for (double r : {0.0, 2.0, 5.0}) {
    spec.r = r;
    const auto est = micro::quadruple_correlator(cfg, levels::SpacingModel::picket, spec, 300);
    CHECK(std::abs(est.value) < 3.5 * est.err);
  }
}

TEST_CASE("quadruple correlator: self pair with distinct channels gives unity") {
  auto cfg = small_config(1, 32);
  cfg.seed = 13;
  micro::QuadrupleSpec spec;
  spec.class_a = 0;
  spec.class_b = 0;
  spec.r = 0.0;
  spec.window = 0.1;  // picket: only mu = nu pairs
  const auto est = micro::quadruple_correlator(cfg, levels::SpacingModel::picket, spec, 300);
  CHECK(std::abs(est.value - 1.0) < 3.0 * est.err);
}

TEST_CASE("quadruple correlator: empty bin raises") {
  auto cfg = small_config(2, 16);
  micro::QuadrupleSpec spec;
  spec.r = 1e6;
  CHECK_THROWS_AS(micro::quadruple_correlator(cfg, levels::SpacingModel::picket, spec, 10),
                  config_error);
}

TEST_CASE("same-spin normalization sum approaches one") {
  const auto est = micro::sum_rule_same_spin(64, 4000, 17);
  // 1 - 3/64 with Monte Carlo noise
  CHECK(std::abs(est.value - (1.0 - 3.0 / 64)) < 4.0 * est.err);
  CHECK(std::abs(est.value - 1.0) < 3.0 / std::sqrt(64.0));
}

TEST_CASE("cross-spin normalization sum approaches one") {
  const auto est = micro::sum_rule_cross_spin(64, 4000, 18);
  CHECK(std::abs(est.value - 1.0) < 4.0 * est.err);
  CHECK(std::abs(est.value - 1.0) < 3.0 / std::sqrt(64.0));
}

TEST_CASE("sum rules are reproducible bit-exact for a fixed seed") {
  const auto a = micro::sum_rule_same_spin(32, 200, 4);
  const auto b = micro::sum_rule_same_spin(32, 200, 4);
  CHECK(a.value == b.value);
  CHECK(a.err == b.err);
}

TEST_CASE("quadruple product mean matches the squared-element form within errors") {
  // realized gamma products are the bilinear forms F = sum_ij c c A_ij; their
  // ensemble mean agrees with the mean of the squared-element form up to the
  // O(1/N) diagonal excess, below the Monte Carlo resolution here
  auto cfg = small_config(2, 24);
  cfg.seed = 26;
  const auto seqs = picket_levels(cfg, 26);
  Rng rng(26);
  stats::Running ff, sq;
  for (int r = 0; r < 2000; ++r) {
    const auto k = micro::build_k_correlation(cfg, rng);
    const auto ens = micro::build_gamma(cfg, k, seqs, rng);
    ff.add(ens.gamma_at(0, 3, 0) * ens.gamma_at(0, 3, 1) * ens.gamma_at(1, 5, 0) *
           ens.gamma_at(1, 5, 1));
    const auto q = micro::lambda_q_estimator(ens, 0, 3, 1, 5, 1, rng);
    sq.add(q.direct);
  }
  const double err = std::sqrt(ff.stderr_mean() * ff.stderr_mean() +
                               sq.stderr_mean() * sq.stderr_mean());
  CHECK(std::abs(ff.mean() - sq.mean()) < 3.0 * err);
}

TEST_CASE("quadruple correlator is reproducible bit-exact") {
  auto cfg = small_config(2, 16);
  cfg.seed = 27;
  micro::QuadrupleSpec spec;
  spec.r = 0.0;
  const auto a = micro::quadruple_correlator(cfg, levels::SpacingModel::poisson, spec, 50);
  const auto b = micro::quadruple_correlator(cfg, levels::SpacingModel::poisson, spec, 50);
  CHECK(a.value == b.value);
  CHECK(a.err == b.err);
  CHECK(a.samples == b.samples);
}

TEST_CASE("lambda estimator: masked Monte Carlo reproduces its closed form") {
  auto cfg = small_config(2, 24);
  cfg.seed = 19;
  Rng rng(19);
  const auto k = micro::build_k_correlation(cfg, rng);
  const auto seqs = picket_levels(cfg, 19);
  const auto ens = micro::build_gamma(cfg, k, seqs, rng);
  const auto q = micro::lambda_q_estimator(ens, 0, 3, 1, 7, 200, rng);
  CHECK(std::abs(q.masked_mc - q.direct) < 3.0 * q.masked_mc_err);
  // the partition average agrees with the mask route in scale
  CHECK(q.k_avg > 0.0);
}

TEST_CASE("lambda estimator: self-pair intensity averages to one") {
  auto cfg = small_config(4, 64);  // N = 256
  cfg.seed = 20;
  Rng rng(20);
  const auto seqs = picket_levels(cfg, 20);
  stats::Running self;
  for (int r = 0; r < 40; ++r) {
    const auto k = micro::build_k_correlation(cfg, rng);
    const auto ens = micro::build_gamma(cfg, k, seqs, rng);
    for (int mu = 0; mu < 8; ++mu) {
      const auto q = micro::lambda_q_estimator(ens, 0, mu, 0, mu, 1, rng);
      self.add(q.direct);
    }
  }
  CHECK(std::abs(self.mean() - 1.0) < 0.05);
}

TEST_CASE("mask averaging grows redundant after the partition average") {
  // the partition (k) average of squared overlaps stabilizes against the
  // mask draw as the dimension grows: its mask-to-mask spread shrinks
  auto rel_spread = [](int per_class, std::uint64_t seed) {
    micro::EnsembleConfig cfg;
    cfg.spins = {{0, 1, per_class, 1.0}, {1, 1, per_class, 1.0}};
    cfg.seed = seed;
    Rng rng(seed);
    const auto k = micro::build_k_correlation(cfg, rng);
    std::vector<levels::LevelSequence> seqs;
    for (std::size_t c = 0; c < cfg.spins.size(); ++c)
      seqs.push_back(
          levels::generate_levels(cfg.spins[c], levels::SpacingModel::picket, seed + c));
    const auto ens = micro::build_gamma(cfg, k, seqs, rng);
    const auto q = micro::lambda_q_estimator(ens, 0, 1, 0, 1, 40, rng);
    // per-mask spread relative to the mean of the k-averaged self intensity
    return q.k_avg_err * std::sqrt(40.0) / q.k_avg;
  };
  const double small = rel_spread(16, 28);
  const double large = rel_spread(64, 29);
  CHECK(large < small);
  CHECK(large < 0.5);
}

TEST_CASE("lambda estimator rejects degenerate channel draws") {
  auto cfg = small_config(2, 16);
  cfg.seed = 21;
  Rng rng(21);
  const auto k = micro::build_k_correlation(cfg, rng);
  const auto seqs = picket_levels(cfg, 21);
  auto ens = micro::build_gamma(cfg, k, seqs, rng);
  ens.eta.setZero();
  CHECK_THROWS_AS(micro::lambda_q_estimator(ens, 0, 0, 1, 0, 1, rng), model_error);
}

TEST_CASE("overlap scaling: 1/N law, class sum, and cross-partition null") {
  const auto res = micro::overlap_scaling_check({64, 128, 256, 512}, 400, 23);
  REQUIRE(res.rows.size() == 4);
  CHECK(std::abs(res.loglog_slope + 1.0) < 0.1);
  for (const auto& row : res.rows) {
    const double expected = 1.0 / row.dim;
    CHECK(std::abs(row.mean_sq_overlap - expected) < 0.15 * expected);
    // class of N/4 states: sum ~ (N/4 + 1)/N within 10%
    const double target = (row.dim / 4 + 1.0) / row.dim;
    CHECK(std::abs(row.sum_rule - target) < 0.1 * target);
  }
  CHECK(std::abs(res.cross_k_mean) < 3.0 * res.cross_k_err);
}

TEST_CASE("partition overlap identity holds to 1e-10 on ensemble bases") {
  auto cfg = small_config(2, 32);
  cfg.seed = 24;
  Rng rng(24);
  const auto k = micro::build_k_correlation(cfg, rng);
  const auto seqs = picket_levels(cfg, 24);
  const auto ens = micro::build_gamma(cfg, k, seqs, rng);
  const int n = cfg.total_dim();
  const auto u = micro::sample_orthogonal(n, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const int mu = static_cast<int>(rng.below(32));
    const int nu = static_cast<int>(rng.below(32));
    const double res = density::scaled_overlap_identity(
        ens.c.row(mu), ens.c.row(32 + nu), u);
    CHECK(res < 1e-10);
  }
}
