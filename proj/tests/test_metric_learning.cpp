#include <gtest/gtest.h>

#include <cmath>

#include "qrelax/exact.hpp"
#include "qrelax/matfun.hpp"
#include "qrelax/metric_learning.hpp"
#include "qrelax/qt_solver.hpp"
#include "test_util.hpp"

using namespace qrelax;

namespace {

double max_diag_h(const Eigen::MatrixXd& s) {
  return spectral_decomposition(s).apply(entropy_kernel).diagonal().maxCoeff();
}

}  // namespace

TEST(DqtDiag, Examples) {
  const Eigen::MatrixXd i3 = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_NEAR(dqt_diag(i3, i3), 0.0, 1e-15);
  EXPECT_NEAR(dqt_diag(Eigen::Vector2d(1.6, 0.4).asDiagonal(), Eigen::Matrix2d::Identity()), 0.23348370725033796,
              1e-14);
  EXPECT_THROW(dqt_diag(i3, Eigen::Vector3d(1, 1, 0).asDiagonal()), std::domain_error);
}

TEST(DqtDiag, DominatesQtDivergence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd a = fixtures::random_spd(5, seed, 0.0);
    const Eigen::MatrixXd b = fixtures::random_spd(5, 100 + seed);
    EXPECT_GE(dqt_diag(a, b), qt_divergence(a, b) - 1e-12);
  }
  // Also against KL: D^QT(Sigma_p, I) <= KL holds at every feature set.
  for (int d = 2; d <= 5; ++d) {
    const ExactDistribution p = fixtures::random_distribution(d, d);
    const Eigen::MatrixXd s = moment_matrix(p, base_feature_set(d));
    EXPECT_LE(qt_divergence(s, Eigen::MatrixXd::Identity(d + 1, d + 1)),
              kl_divergence(p, ExactDistribution::uniform(d)) + 1e-12);
  }
}

TEST(SubgradientDiag, Examples) {
  EXPECT_TRUE(subgradient_diag(Eigen::MatrixXd::Identity(3, 3)).isZero(1e-15));
  // Diagonal Sigma: h is largest at the entry furthest from 1 in h.
  const Eigen::MatrixXd g = subgradient_diag(Eigen::Vector3d(1.0, 3.0, 0.5).asDiagonal());
  Eigen::Matrix3d expected = Eigen::Matrix3d::Zero();
  expected(1, 1) = std::log(3.0);
  EXPECT_LE((g - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(subgradient_diag(Eigen::Vector2d(1, 0).asDiagonal()), std::domain_error);
}

TEST(SubgradientDiag, SubgradientInequality) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd s = fixtures::random_spd(5, seed);
    const Eigen::MatrixXd g = subgradient_diag(s);
    const double f0 = max_diag_h(s);
    for (std::uint64_t k = 0; k < 5; ++k) {
      const Eigen::MatrixXd dir = fixtures::random_symmetric(5, 1000 + 10 * seed + k);
      const double t = 1e-3;
      EXPECT_GE(max_diag_h(s + t * dir) - f0, t * g.cwiseProduct(dir).sum() - 1e-6);
    }
  }
}

TEST(Kelley, ZeroParameter) {
  const FeatureSet fs = base_feature_set(3);
  const KelleyResult r = kelley_bound(Eigen::MatrixXd::Zero(4, 4), fs);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.bound, 0.0, 1e-4);
  EXPECT_GE(r.bound, -1e-9);
}

TEST(Kelley, CertifiedBracket) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const IsingModel m = sample_parameters({SchemeKind::gaussian}, GraphTopology::complete(3), seed);
    const FeatureSet fs = base_feature_set(3);
    const Eigen::MatrixXd f = parameter_matrix(m, fs);
    const KelleyResult r = kelley_bound(f, fs);
    EXPECT_GE(r.bound, log_partition(m) - 1e-6);
    EXPECT_GE(r.bound, r.primal_value - 1e-9);
    // The relaxation value is below the plain relaxation (max diag h >= mean diag h).
    SolverConfig c;
    c.tolerance = 1e-8;
    EXPECT_LE(r.primal_value, primal_dual_solve(f, fs, c).bound + 1e-8);
    for (std::size_t i = 1; i < r.lower_history.size(); ++i) {
      EXPECT_GE(r.lower_history[i], r.lower_history[i - 1]);
      EXPECT_LE(r.upper_history[i], r.upper_history[i - 1]);
    }
    if (r.converged) EXPECT_LE(r.gap, 1e-4);
  }
}

TEST(Kelley, Validation) {
  const FeatureSet fs = base_feature_set(2);
  EXPECT_THROW(kelley_bound(Eigen::MatrixXd::Zero(4, 4), fs), std::invalid_argument);
  EXPECT_THROW(kelley_bound(Eigen::MatrixXd::Zero(3, 3), fs, KelleyOptions{.epsilon = -1}), std::invalid_argument);
  EXPECT_THROW(kelley_bound(Eigen::MatrixXd::Zero(3, 3), fs, KelleyOptions{.max_cuts = 0}), std::invalid_argument);
}
