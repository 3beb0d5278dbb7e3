#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qrelax/features.hpp"

namespace qrelax {

/// max_i [B^{1/2} h(B^{-1/2} A B^{-1/2}) B^{1/2}]_{ii}, h(t) = t log t - t + 1.
/// Never smaller than qt_divergence(A, B).
double dqt_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Gradient of Sigma -> [h(Sigma)]_{ii} for the smallest i attaining
/// max diag h(Sigma); a subgradient of max diag h at Sigma (Sigma > 0).
Eigen::MatrixXd subgradient_diag(const Eigen::MatrixXd& s);

struct KelleyCut {
  Eigen::MatrixXd point;
  double value = 0.0;
  Eigen::MatrixXd subgradient;
};

/// Cutting-plane state for minimizing f(Sigma) = -tr(Sigma F) + eps max diag h(Sigma)
/// over K'. lower is the model minimum (a certified lower bound on min f),
/// upper the best evaluated f.
struct KelleyState {
  std::vector<KelleyCut> cuts;
  double lower = 0.0;
  double upper = 0.0;
};

struct KelleyOptions {
  double epsilon = 1.0;
  double tolerance = 1e-4;
  int max_cuts = 200;
  double inner_tolerance = 1e-9;
};

struct KelleyResult {
  /// -lower: certified upper bound on the diagonal-metric relaxation.
  double bound = 0.0;
  /// -upper: relaxation value at the best evaluated point.
  double primal_value = 0.0;
  double gap = 0.0;
  bool converged = false;
  int cuts = 0;
  Eigen::MatrixXd sigma;  // best evaluated point
  std::vector<double> lower_history;
  std::vector<double> upper_history;
};

KelleyResult kelley_bound(const Eigen::MatrixXd& f, const FeatureSet& features, const KelleyOptions& options = {});

}  // namespace qrelax
