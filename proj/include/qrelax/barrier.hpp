#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qrelax/features.hpp"

namespace qrelax {

/// Coordinates of the affine space V ∩ {diag = 1}: Sigma(z) = I + sum_k z_k B_k,
/// where B_k is the 0/1 indicator of the k-th XOR class other than the zero
/// class. Every Sigma(z) has trace n.
class ClassCoordinates {
 public:
  explicit ClassCoordinates(const XorClassTable& table);

  int size() const { return static_cast<int>(class_ids_.size()); }
  int n() const { return table_->n; }
  const XorClassTable& table() const { return *table_; }
  /// XOR class id of coordinate k.
  int class_id(int k) const { return class_ids_[k]; }
  /// Coordinate of a class id, or -1 for the zero class.
  int coordinate(int class_id) const { return coordinate_of_[class_id]; }

  Eigen::MatrixXd matrix(const Eigen::VectorXd& z) const;
  /// z with Sigma(z) = proj_V_H(sigma).
  Eigen::VectorXd coordinates(const Eigen::MatrixXd& sigma) const;
  /// <G, B_k> for every k.
  Eigen::VectorXd inner_products(const Eigen::MatrixXd& g) const;

 private:
  const XorClassTable* table_;
  std::vector<int> class_ids_;
  std::vector<int> coordinate_of_;
};

/// Minimize  c^T x - w logdet(Sigma(z) + D)  subject to  Sigma(z) >= 0,  A x <= b,
/// over x = (z, t_1..t_m) where the trailing entries are free scalars.
struct BarrierProblem {
  int num_extra = 0;
  Eigen::VectorXd c;
  double logdet_weight = 0.0;
  Eigen::MatrixXd logdet_shift;  // D, n x n; only read when logdet_weight > 0
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

struct BarrierOptions {
  double gap_tolerance = 1e-9;
  double mu_initial = 1.0;
  double mu_factor = 8.0;
  int max_newton_steps = 2000;
};

struct BarrierResult {
  Eigen::VectorXd x;
  Eigen::MatrixXd sigma;
  double objective = 0.0;
  /// nu / mu at the last centering; the objective is within this of optimal.
  double gap = 0.0;
  int newton_steps = 0;
  bool converged = false;
};

/// Path-following log-barrier method. x0 must be strictly feasible.
BarrierResult barrier_solve(const ClassCoordinates& coords, const BarrierProblem& problem,
                            const Eigen::VectorXd& x0, const BarrierOptions& options = {});

}  // namespace qrelax
