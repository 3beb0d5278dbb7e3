#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "qrelax/features.hpp"
#include "qrelax/greedy.hpp"
#include "qrelax/model.hpp"
#include "test_util.hpp"

using namespace qrelax;

namespace {

IsingModel two_spin(double t1, double t2, double t12) {
  Eigen::VectorXd lin(2);
  lin << t1, t2;
  return {GraphTopology::complete(2), lin, {t12}};
}

}  // namespace

TEST(EvaluateF, HandComputedValues) {
  const IsingModel m = two_spin(0.5, -0.3, 0.2);
  EXPECT_NEAR(evaluate_f(m, std::vector<int>{1, -1}), 0.6, 1e-15);
  EXPECT_NEAR(evaluate_f(m, std::vector<int>{1, 1}), 0.4, 1e-15);
  const IsingModel zero = two_spin(0, 0, 0);
  EXPECT_EQ(evaluate_f(zero, std::vector<int>{-1, 1}), 0.0);
}

TEST(EvaluateF, RejectsBadInput) {
  const IsingModel m = two_spin(0.5, -0.3, 0.2);
  EXPECT_THROW(evaluate_f(m, std::vector<int>{1}), std::invalid_argument);
  EXPECT_THROW(evaluate_f(m, std::vector<int>{1, 0}), std::invalid_argument);
}

TEST(ParameterMatrix, SingleSpin) {
  Eigen::VectorXd lin(1);
  lin << 1.0;
  const IsingModel m(GraphTopology::independent(1), lin, {});
  Eigen::Matrix2d expected;
  expected << 0, 0.5, 0.5, 0;
  EXPECT_TRUE(parameter_matrix(m, base_feature_set(1)).isApprox(expected));
}

TEST(ParameterMatrix, ZeroModelAndPairTerm) {
  EXPECT_TRUE(parameter_matrix(two_spin(0, 0, 0), base_feature_set(2)).isZero());
  const Eigen::MatrixXd f = parameter_matrix(two_spin(0, 0, 2.0), base_feature_set(2));
  EXPECT_EQ(f(1, 2), 1.0);
  EXPECT_EQ(f(2, 1), 1.0);
  EXPECT_EQ(f(1, 1), 0.0);
  EXPECT_EQ(f(0, 1), 0.0);
}

TEST(ParameterMatrix, RequiresBaseMonomials) {
  FeatureSet fs(2, {FeatureIndex(0), FeatureIndex(1), FeatureIndex(3)});
  EXPECT_THROW(parameter_matrix(two_spin(1, 1, 1), fs), std::invalid_argument);
}

TEST(ParameterMatrix, QuadraticFormReproducesEnergyExhaustively) {
  for (int d : {1, 3, 6, 10}) {
    const IsingModel m = sample_parameters({SchemeKind::gaussian}, GraphTopology::complete(d), 100 + d);
    std::vector<FeatureSet> sets = {base_feature_set(d)};
    if (d >= 3) sets.push_back(degree_ordered_features(d, std::min(1 << d, d + 1 + 5)));
    for (const FeatureSet& fs : sets) {
      const Eigen::MatrixXd f = parameter_matrix(m, fs);
      for (std::uint64_t s = 0; s < (std::uint64_t{1} << d); ++s) {
        const Eigen::VectorXd phi = feature_vector(fs, s);
        ASSERT_NEAR(phi.dot(f * phi), evaluate_f(m, fixtures::spins(s, d)), 1e-12);
      }
    }
  }
}

TEST(ParameterMatrix, EmbeddingPadsWithZeros) {
  const int d = 4;
  const IsingModel m = sample_parameters({SchemeKind::gaussian}, GraphTopology::complete(d), 9);
  const FeatureSet small = base_feature_set(d);
  const FeatureSet large = degree_ordered_features(d, 12);
  const Eigen::MatrixXd fs = parameter_matrix(m, small);
  const Eigen::MatrixXd fl = parameter_matrix(m, large);
  EXPECT_TRUE(fl.topLeftCorner(small.size(), small.size()).isApprox(fs));
  EXPECT_TRUE(fl.rightCols(large.size() - small.size()).isZero());
  EXPECT_TRUE(fl.bottomRows(large.size() - small.size()).isZero());

  // A permuted feature order gives the permuted matrix.
  std::vector<FeatureIndex> items(large.items().begin(), large.items().end());
  std::reverse(items.begin(), items.end());
  const FeatureSet reversed(d, items);
  const Eigen::MatrixXd fr = parameter_matrix(m, reversed);
  const int n = large.size();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) EXPECT_EQ(fr(a, b), fl(n - 1 - a, n - 1 - b));
}

TEST(SampleParameters, DegenerateStrength) {
  const IsingModel m = sample_parameters({SchemeKind::logdet, Coupling::attractive, 0.0}, GraphTopology::complete(6), 3);
  for (double c : m.couplings()) EXPECT_EQ(c, 0.0);
}

TEST(SampleParameters, DeterministicPerSeed) {
  const GraphTopology g = GraphTopology::complete(7);
  const ParameterScheme s{SchemeKind::logdet, Coupling::mixed, 0.4};
  EXPECT_EQ(sample_parameters(s, g, 42), sample_parameters(s, g, 42));
  EXPECT_FALSE(sample_parameters(s, g, 42) == sample_parameters(s, g, 43));
}

TEST(SampleParameters, RangesPerScheme) {
  const GraphTopology g = GraphTopology::complete(8);
  const double w = 0.7;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto check = [&](ParameterScheme s, double lin, double lo, double hi) {
      const IsingModel m = sample_parameters(s, g, seed);
      for (int i = 0; i < 8; ++i) EXPECT_LE(std::abs(m.linear()[i]), lin);
      for (double c : m.couplings()) {
        EXPECT_GE(c, lo);
        EXPECT_LE(c, hi);
      }
    };
    check({SchemeKind::logdet, Coupling::attractive, w}, 0.25, 0.0, 2 * w);
    check({SchemeKind::logdet, Coupling::mixed, w}, 0.25, -w, w);
    check({SchemeKind::logdet, Coupling::repulsive, w}, 0.25, -2 * w, 0.0);
    check({SchemeKind::trw, Coupling::attractive, w}, 0.05, 0.0, w);
    check({SchemeKind::trw, Coupling::mixed, w}, 0.05, -w, w);
  }
}

TEST(SampleParameters, MixedCouplingMeanIsZero) {
  // 10^5 draws of U(-w, w): mean within 3 standard errors of 0.
  const double w = 0.5;
  const GraphTopology g = GraphTopology::complete(20);  // 190 edges
  double sum = 0.0;
  long count = 0;
  for (std::uint64_t seed = 0; count < 100000; ++seed)
    for (double c : sample_parameters({SchemeKind::logdet, Coupling::mixed, w}, g, seed).couplings()) {
      sum += c;
      ++count;
    }
  const double se = w / std::sqrt(3.0) / std::sqrt(static_cast<double>(count));
  EXPECT_LT(std::abs(sum / count), 3 * se);
}

TEST(SampleParameters, GaussianMoments) {
  const GraphTopology g = GraphTopology::complete(30);
  double s1 = 0, s2 = 0;
  long count = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const IsingModel m = sample_parameters({SchemeKind::gaussian}, g, seed);
    for (double c : m.couplings()) s1 += c, s2 += c * c, ++count;
    for (int i = 0; i < 30; ++i) s1 += m.linear()[i], s2 += m.linear()[i] * m.linear()[i], ++count;
  }
  EXPECT_NEAR(s1 / count, 0.0, 0.02);
  EXPECT_NEAR(s2 / count, 1.0, 0.02);
}

TEST(SampleParameters, Errors) {
  const GraphTopology g = GraphTopology::complete(3);
  EXPECT_THROW(sample_parameters({SchemeKind::trw, Coupling::repulsive, 0.1}, g, 0), std::invalid_argument);
  EXPECT_THROW(sample_parameters({SchemeKind::logdet, Coupling::mixed, -0.1}, g, 0), std::invalid_argument);
}

TEST(RandomTree, SmallCases) {
  EXPECT_EQ(random_tree(1, 5).num_edges(), 0);
  const GraphTopology t2 = random_tree(2, 5);
  ASSERT_EQ(t2.num_edges(), 1);
  EXPECT_EQ(t2.edges()[0], (Edge{0, 1}));
}

TEST(RandomTree, ConnectedAcyclicDeterministic) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GraphTopology t = random_tree(8, seed);
    EXPECT_EQ(t.num_edges(), 7);
    EXPECT_TRUE(t.is_connected());
    EXPECT_EQ(t.kind(), GraphKind::tree);
    EXPECT_EQ(t, random_tree(8, seed));
  }
}

TEST(RandomTree, UniformOverLabeledTrees) {
  // 4^2 = 16 labeled trees on 4 nodes.
  std::map<std::vector<std::pair<int, int>>, int> counts;
  const int draws = 16000;
  for (int s = 0; s < draws; ++s) {
    const GraphTopology t = random_tree(4, s);
    std::vector<std::pair<int, int>> key;
    for (const Edge& e : t.edges()) key.emplace_back(e.i, e.j);
    ++counts[key];
  }
  EXPECT_EQ(counts.size(), 16u);
  for (const auto& [_, c] : counts) EXPECT_NEAR(c, 1000, 150);
}

TEST(GraphTopology, KindInvariants) {
  EXPECT_THROW(GraphTopology(GraphKind::independent, 3, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology(GraphKind::complete, 3, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology(GraphKind::tree, 3, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology(GraphKind::tree, 4, {{0, 1}, {1, 2}, {0, 2}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology::custom(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology::custom(3, {{1, 1}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology::custom(3, {{0, 3}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology::custom(0, {}), std::invalid_argument);
  EXPECT_EQ(GraphTopology::complete(5).num_edges(), 10);
  EXPECT_EQ(GraphTopology::complete(5).edge_index(3, 1), GraphTopology::complete(5).edge_index(1, 3));
  EXPECT_EQ(GraphTopology::independent(5).edge_index(0, 1), -1);
}

TEST(IsingModel, CouplingLookupAndScaling) {
  const IsingModel m = two_spin(0.5, -0.3, 0.2);
  EXPECT_EQ(m.coupling(1, 0), 0.2);
  const IsingModel s = m.scaled(2.0);
  EXPECT_EQ(s.coupling(0, 1), 0.4);
  EXPECT_EQ(s.linear()[1], -0.6);
  EXPECT_THROW(IsingModel(GraphTopology::complete(2), Eigen::VectorXd::Zero(3), {0.0}), std::invalid_argument);
  EXPECT_THROW(IsingModel(GraphTopology::complete(2), Eigen::VectorXd::Zero(2), {}), std::invalid_argument);
}

TEST(ModelText, RoundTripIsExact) {
  for (GraphKind kind : {GraphKind::independent, GraphKind::tree, GraphKind::complete}) {
    const GraphTopology g = kind == GraphKind::tree ? random_tree(6, 1)
                            : kind == GraphKind::complete ? GraphTopology::complete(6)
                                                          : GraphTopology::independent(6);
    const IsingModel m = sample_parameters({SchemeKind::gaussian}, g, 77);
    std::stringstream ss;
    write_model(ss, m);
    EXPECT_EQ(read_model(ss), m);
  }
}

TEST(ModelText, MalformedInput) {
  std::stringstream bad("qrelax-model 1\nd 2\ngraph complete\nlinear 0.1\n");
  EXPECT_THROW(read_model(bad), std::exception);
  std::stringstream wrong("not-a-model");
  EXPECT_THROW(read_model(wrong), std::runtime_error);
}

TEST(ModelText, StringConversions) {
  for (auto k : {GraphKind::independent, GraphKind::tree, GraphKind::complete, GraphKind::custom})
    EXPECT_EQ(parse_graph_kind(to_string(k)), k);
  for (auto k : {SchemeKind::gaussian, SchemeKind::logdet, SchemeKind::trw}) EXPECT_EQ(parse_scheme_kind(to_string(k)), k);
  for (auto c : {Coupling::attractive, Coupling::mixed, Coupling::repulsive}) EXPECT_EQ(parse_coupling(to_string(c)), c);
  EXPECT_THROW(parse_graph_kind("grid"), std::invalid_argument);
}
