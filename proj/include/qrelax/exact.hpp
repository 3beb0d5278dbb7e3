#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qrelax/features.hpp"
#include "qrelax/model.hpp"

namespace qrelax {

/// Brute-force oracles over all 2^d spin configurations. States are indexed
/// in binary counting order: bit i of the index set <=> x_i = +1.
/// The base measure is the uniform probability on {-1,1}^d, so Phi(0) = 0.

inline constexpr int kMaxExactSpins = 25;

struct ExactDistribution {
  int d = 0;
  std::vector<double> probs;

  /// Uniform distribution on {-1,1}^d.
  static ExactDistribution uniform(int d);
  /// Normalizes nonnegative weights.
  static ExactDistribution from_weights(int d, std::vector<double> weights);
};

/// Phi_eps(f) = eps log sum_x exp(f(x)/eps) q(x).
double log_partition(const IsingModel& model, double epsilon = 1.0);

ExactDistribution exact_distribution(const IsingModel& model, double epsilon = 1.0);

/// D(p||q) with 0 log 0 = 0; throws if p is not absolutely continuous w.r.t. q.
double kl_divergence(const ExactDistribution& p, const ExactDistribution& q);

/// E_p[x^m] for every mask m in {0,1}^d (Walsh-Hadamard transform of p).
std::vector<double> monomial_moments(const ExactDistribution& p);

/// Sigma_p = E_p[phi(x) phi(x)^T] for the given features.
Eigen::MatrixXd moment_matrix(const ExactDistribution& p, const FeatureSet& features);

/// Same, from precomputed monomial moments.
Eigen::MatrixXd moment_matrix(const std::vector<double>& moments, const FeatureSet& features);

/// Single-site marginals p(x_i = +1).
Eigen::VectorXd exact_marginals(const ExactDistribution& p);

double max_f(const IsingModel& model);

}  // namespace qrelax
