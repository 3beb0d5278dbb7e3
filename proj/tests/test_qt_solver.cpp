#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qrelax/exact.hpp"
#include "qrelax/greedy.hpp"
#include "qrelax/harness.hpp"
#include "qrelax/matfun.hpp"
#include "qrelax/qt_solver.hpp"
#include "qrelax/rng.hpp"
#include "test_util.hpp"

using namespace qrelax;

namespace {

SolverResult solve(const IsingModel& m, const FeatureSet& fs, double eps, double tol = 1e-7) {
  SolverConfig c;
  c.epsilon = eps;
  c.tolerance = tol;
  return primal_dual_solve(parameter_matrix(m, fs), fs, c);
}

IsingModel gaussian(int d, std::uint64_t seed, GraphKind kind = GraphKind::complete) {
  const GraphTopology g = kind == GraphKind::tree ? random_tree(d, seed)
                          : kind == GraphKind::complete ? GraphTopology::complete(d)
                                                        : GraphTopology::independent(d);
  return sample_parameters({SchemeKind::gaussian}, g, seed);
}

FeatureSet with_edges(const IsingModel& m) {
  FeatureSet fs = base_feature_set(m.num_spins());
  for (const Edge& e : m.graph().edges()) fs.add(FeatureIndex((std::uint64_t{1} << e.i) | (std::uint64_t{1} << e.j)));
  return fs;
}

}  // namespace

TEST(QtDivergence, Examples) {
  const Eigen::MatrixXd i3 = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_NEAR(qt_divergence(i3, i3), 0.0, 1e-15);
  Eigen::Matrix2d a;
  a << 1, 0.6, 0.6, 1;
  EXPECT_NEAR(qt_divergence(a, Eigen::Matrix2d::Identity()), 0.19274475702175753, 1e-14);
  EXPECT_NEAR(qt_divergence(2 * Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()),
              2 * std::numbers::ln2 - 1, 1e-15);
  EXPECT_THROW(qt_divergence(a, Eigen::Vector2d(1, 0).asDiagonal()), std::domain_error);
  EXPECT_THROW(qt_divergence(a, i3), std::invalid_argument);
}

TEST(QtDivergence, VonNeumannTerm) {
  EXPECT_NEAR(von_neumann_entropy_term(Eigen::MatrixXd::Identity(4, 4)), 0.0, 1e-15);
  EXPECT_NEAR(von_neumann_entropy_term(Eigen::Vector2d(1.6, 0.4).asDiagonal()), 0.19274475702175753, 1e-14);
  const Eigen::VectorXd phi = feature_vector(base_feature_set(3), std::uint64_t{5});
  EXPECT_NEAR(von_neumann_entropy_term(phi * phi.transpose()), std::log(4.0), 1e-12);
}

TEST(QtDivergence, DiagonalMetricDominates) {
  // dqt_diag lives in metric_learning; here only the D^QT = KL identity at full features.
  for (int d = 1; d <= 5; ++d) {
    const ExactDistribution p = fixtures::random_distribution(d, 900 + d);
    const Eigen::MatrixXd s = moment_matrix(p, full_feature_set(d));
    EXPECT_NEAR(qt_divergence(s, Eigen::MatrixXd::Identity(s.rows(), s.cols())),
                kl_divergence(p, ExactDistribution::uniform(d)), 1e-10);
  }
}

TEST(ProxG, Examples) {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_TRUE(prox_G(Eigen::MatrixXd::Identity(3, 3), 1.0, z, 3.0).isIdentity(1e-14));
  Eigen::MatrixXd s0(1, 1);
  s0 << 2.0;
  EXPECT_NEAR(prox_G(s0, 1.0, Eigen::MatrixXd::Zero(1, 1), 1.0)(0, 0), wright_omega(2.0), 1e-15);
  EXPECT_THROW(prox_G(s0, 0.0, s0, 1.0), std::invalid_argument);
}

TEST(ProxG, OptimalityEquation) {
  // log S + (n/(eps tau)) S = (n/eps)(F + S0/tau), checked on the spectrum:
  // S commutes with the right-hand side and the map between eigenvalues is increasing.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 8;
    const double tau = 3.0, eps = 0.25 + seed;
    const Eigen::MatrixXd f = fixtures::random_symmetric(n, seed);
    const Eigen::MatrixXd s0 = fixtures::random_symmetric(n, 100 + seed);
    const Eigen::MatrixXd s = prox_G(s0, tau, f, eps);
    const Eigen::MatrixXd rhs = (n / eps) * (f + s0 / tau);
    EXPECT_LE((s * rhs - rhs * s).cwiseAbs().maxCoeff(), 1e-9 * rhs.cwiseAbs().maxCoeff() * s.cwiseAbs().maxCoeff());
    const Eigen::VectorXd ls = spectral_decomposition(s).eigenvalues;
    const Eigen::VectorXd lr = spectral_decomposition(rhs).eigenvalues;
    for (int i = 0; i < n; ++i) {
      if (ls[i] < 1e-6) continue;  // roundoff dominates log of tiny eigenvalues
      EXPECT_NEAR(std::log(ls[i]) + n / (eps * tau) * ls[i], lr[i], 1e-9 * std::max(1.0, std::abs(lr[i])));
    }
  }
}

TEST(ProxFstar, ExamplesAndMoreau) {
  const FeatureSet fs = base_feature_set(3);
  const XorClassTable t = xor_class_table(fs);
  EXPECT_TRUE(prox_Fstar(Eigen::MatrixXd::Zero(4, 4), 1.0, t).isApprox(-Eigen::MatrixXd::Identity(4, 4)));
  // Y0 in V^perp with zero trace: only the -sigma I shift remains.
  Eigen::MatrixXd y0 = fixtures::random_symmetric(4, 3);
  y0 -= project_V(y0, t);
  EXPECT_LE((prox_Fstar(y0, 0.7, t) - (y0 - 0.7 * Eigen::MatrixXd::Identity(4, 4))).cwiseAbs().maxCoeff(), 1e-14);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd y = fixtures::random_symmetric(4, 10 + seed);
    const double sigma = 0.3 + seed;
    const Eigen::MatrixXd p = prox_Fstar(y, sigma, t);
    EXPECT_LE((y - (p + sigma * project_V_H(y / sigma, t))).cwiseAbs().maxCoeff(), 1e-12);
    // Output is in V^perp + R I.
    const Eigen::MatrixXd pv = project_V(p, t);
    EXPECT_LE((pv - pv.trace() / 4 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FeasiblePoint, Rounding) {
  const XorClassTable t = xor_class_table(base_feature_set(1));
  EXPECT_TRUE(feasible_point(Eigen::Matrix2d::Identity(), t).isIdentity(1e-15));
  // [[1, 2], [2, 1]] has lambda_min = -1, so u = 1/2 gives [[1, 1], [1, 1]].
  Eigen::Matrix2d s;
  s << 1, 2, 2, 1;
  EXPECT_TRUE(feasible_point(s, t).isApprox(Eigen::Matrix2d::Ones(), 1e-14));
  const FeatureSet fs = degree_ordered_features(4, 9);
  const XorClassTable t4 = xor_class_table(fs);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd r = feasible_point(3 * fixtures::random_symmetric(9, seed), t4);
    EXPECT_NEAR(r.trace(), 9.0, 1e-10);
    EXPECT_LE((project_V(r, t4) - r).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r).eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(ExtractMarginals, Examples) {
  const FeatureSet fs = base_feature_set(3);
  EXPECT_TRUE(extract_marginals(Eigen::MatrixXd::Identity(4, 4), fs).isApprox(Eigen::VectorXd::Constant(3, 0.5)));
  EXPECT_TRUE(extract_marginals(Eigen::MatrixXd::Ones(4, 4), fs).isApprox(Eigen::VectorXd::Ones(3)));
  Eigen::Matrix2d s;
  s << 1, 0.6, 0.6, 1;
  EXPECT_NEAR(extract_marginals(s, base_feature_set(1))[0], 0.8, 1e-15);
}

TEST(DualCertificate, WeakDuality) {
  // U(y) >= objective(Sigma) for every y in V^perp + R I and feasible Sigma.
  const IsingModel m = gaussian(4, 5);
  const FeatureSet fs = degree_ordered_features(4, 8);
  const XorClassTable t = xor_class_table(fs);
  const Eigen::MatrixXd f = parameter_matrix(m, fs);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd y = prox_Fstar(fixtures::random_symmetric(8, seed), 1.0, t);
    const Eigen::MatrixXd s = feasible_point(fixtures::random_symmetric(8, 50 + seed), t);
    for (double eps : {0.0, 0.5, 2.0})
      EXPECT_GE(dual_certificate(y, f, eps), relaxation_objective(s, f, eps) - 1e-10);
  }
}

TEST(Solver, ZeroParameterCertificate) {
  for (int d : {1, 3, 6}) {
    const FeatureSet fs = base_feature_set(d);
    SolverConfig c;
    c.tolerance = 1e-9;
    const SolverResult r = primal_dual_solve(Eigen::MatrixXd::Zero(d + 1, d + 1), fs, c);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 5);
    EXPECT_NEAR(r.bound, 0.0, 1e-9);
  }
}

TEST(Solver, SingleSpinIsExact) {
  Eigen::VectorXd lin(1);
  lin << 0.5;
  const IsingModel m(GraphTopology::independent(1), lin, {});
  const SolverResult r = solve(m, base_feature_set(1), 1.0, 1e-10);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.bound, 0.12011450695827752463, 1e-9);
}

TEST(Solver, UpperBoundAndGapCertificate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const IsingModel m = gaussian(5, seed);
    const SolverResult r = solve(m, base_feature_set(5), 1.0, 1e-6);
    EXPECT_TRUE(r.converged);
    EXPECT_GE(r.bound, log_partition(m) - 1e-6);
    EXPECT_GE(r.gap, -1e-9);
    EXPECT_LE(r.gap, 1e-6);
    EXPECT_NEAR(r.gap, r.bound - r.primal_value, 1e-12);
  }
}

TEST(Solver, UpperBoundAcrossSchemesAndTemperatures) {
  for (int d = 3; d <= 8; ++d)
    for (double eps : {0.25, 1.0, 4.0}) {
      const IsingModel g = gaussian(d, 7 * d);
      const IsingModel l =
          sample_parameters({SchemeKind::logdet, Coupling::mixed, 0.5}, GraphTopology::complete(d), 7 * d);
      for (const IsingModel* m : {&g, &l}) {
        const SolverResult r = solve(*m, base_feature_set(d), eps, 1e-6);
        EXPECT_GE(r.bound, log_partition(*m, eps) - 1e-6) << "d=" << d << " eps=" << eps;
      }
    }
}

TEST(Solver, NonincreasingInTemperature) {
  const IsingModel m = gaussian(5, 3);
  double prev = 1e300;
  for (double eps : {0.0, 0.25, 1.0, 4.0}) {
    const double b = solve(m, base_feature_set(5), eps, 1e-7).bound;
    EXPECT_LE(b, prev + 2e-6);
    prev = b;
  }
}

// Enlarging the feature set only adds constraints: the leading block of any
// feasible point for the larger set is feasible for the smaller one, with the
// same linear term.
TEST(Solver, HierarchyFeasibleSetsAreNested) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const IsingModel m = gaussian(4, 60 + seed, seed % 2 ? GraphKind::tree : GraphKind::complete);
    for (int n = 6; n <= 16; ++n) {
      const FeatureSet small = degree_ordered_features(4, n - 1), big = degree_ordered_features(4, n);
      const SolverResult r = solve(m, big, 1.0, 1e-5);
      const Eigen::MatrixXd block = r.sigma_feasible.topLeftCorner(n - 1, n - 1);
      EXPECT_NEAR(block.trace(), n - 1, 1e-9);
      EXPECT_LT((block - project_V(block, xor_class_table(small))).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block).eigenvalues().minCoeff(), -1e-12);
      EXPECT_NEAR((block * parameter_matrix(m, small)).trace(),
                  (r.sigma_feasible * parameter_matrix(m, big)).trace(), 1e-9);
    }
  }
}

// Nested feasible sets do not make a_eps monotone: the entropy term is
// normalised by n, and a compressed block can carry more of it per feature.
// Frozen counterexample: d = 5 independent Gaussian model, n = 7 -> 8.
TEST(Solver, HierarchyValueCanIncrease) {
  const std::uint64_t seed = draw_seeds(7, 0, 3).model;
  const IsingModel m =
      sample_parameters({SchemeKind::gaussian}, make_graph(GraphKind::independent, 5, splitmix64(seed ^ 1)), seed);
  const FeatureSet f7 = degree_ordered_features(5, 7), f8 = degree_ordered_features(5, 8);
  const SolverResult r7 = solve(m, f7, 1.0, 1e-8), r8 = solve(m, f8, 1.0, 1e-8);
  EXPECT_NEAR(r7.bound, 3.401025, 1e-5);
  EXPECT_NEAR(r8.bound, 3.472561, 1e-5);
  const Eigen::MatrixXd block = r8.sigma_feasible.topLeftCorner(7, 7);
  EXPECT_GT(von_neumann_entropy_term(block), von_neumann_entropy_term(r8.sigma_feasible) + 0.05);
  EXPECT_GE(r8.bound, log_partition(m));
}

TEST(Solver, FullFeaturesAreTight) {
  for (int d = 2; d <= 4; ++d)
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const IsingModel m = gaussian(d, 40 + seed);
      EXPECT_NEAR(solve(m, full_feature_set(d), 1.0, 1e-8).bound, log_partition(m), 1e-6);
    }
}

TEST(Solver, ZeroTemperature) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const IsingModel ind = gaussian(6, seed, GraphKind::independent);
    EXPECT_NEAR(solve(ind, base_feature_set(6), 0.0, 1e-6).bound, ind.linear().cwiseAbs().sum(), 1e-5);
    const IsingModel tree = gaussian(6, seed, GraphKind::tree);
    EXPECT_NEAR(solve(tree, with_edges(tree), 0.0, 1e-6).bound, max_f(tree), 1e-4);
  }
  EXPECT_NEAR(primal_dual_solve(Eigen::MatrixXd::Zero(4, 4), base_feature_set(3), SolverConfig{.epsilon = 0.0}).bound,
              0.0, 1e-9);
}

TEST(Solver, TraceIsRecorded) {
  const IsingModel m = gaussian(5, 2);
  SolverConfig c;
  c.tolerance = 1e-8;
  const SolverResult r = primal_dual_solve(parameter_matrix(m, base_feature_set(5)), base_feature_set(5), c, true);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_EQ(r.trace.front().iteration, 1);
  EXPECT_EQ(r.trace.back().iteration, r.iterations);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].gap, r.trace[i - 1].gap);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "iteration,bound,primal_value,gap");
}

TEST(Solver, IterationLimitReportsNonConvergence) {
  const IsingModel m = gaussian(6, 9);
  SolverConfig c;
  c.tolerance = 1e-12;
  c.max_iterations = 10;
  const SolverResult r = primal_dual_solve(parameter_matrix(m, base_feature_set(6)), base_feature_set(6), c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 10);
  EXPECT_GE(r.bound, log_partition(m));
}

TEST(Solver, ConfigValidation) {
  const FeatureSet fs = base_feature_set(2);
  const Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(primal_dual_solve(f, fs, SolverConfig{.tau = 10, .sigma = 1}), std::invalid_argument);
  EXPECT_THROW(primal_dual_solve(f, fs, SolverConfig{.tolerance = 0}), std::invalid_argument);
  EXPECT_THROW(primal_dual_solve(f, fs, SolverConfig{.epsilon = -1}), std::invalid_argument);
  EXPECT_THROW(primal_dual_solve(Eigen::MatrixXd::Zero(4, 4), fs, SolverConfig{}), std::invalid_argument);
  Eigen::MatrixXd asym = f;
  asym(0, 1) = 1;
  EXPECT_THROW(primal_dual_solve(asym, fs, SolverConfig{}), std::invalid_argument);
}
