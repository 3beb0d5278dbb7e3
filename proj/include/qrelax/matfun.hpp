#pragma once

#include <functional>

#include <Eigen/Dense>

namespace qrelax {

/// Real branch of the Wright Omega function: the omega > 0 with
/// omega + log(omega) = z. Halley-type (Fritsch) refinement from a
/// piecewise initial guess; relative accuracy about 1e-15.
double wright_omega(double z);

/// Eigen-decomposition A = U diag(values) U^T with values sorted descending.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // columns

  Eigen::MatrixXd reconstruct() const;
  Eigen::MatrixXd apply(const std::function<double(double)>& h) const;
};

SpectralDecomposition spectral_decomposition(const Eigen::MatrixXd& a);

/// h(A) = U diag(h(lambda)) U^T. Throws std::domain_error if h is not finite
/// on some eigenvalue.
Eigen::MatrixXd spectral_apply(const std::function<double(double)>& h, const Eigen::MatrixXd& a);

/// Gradient of A -> tr(B h(A)) at a symmetric A (Daleckii-Krein formula),
/// symmetrized. Eigenvalue pairs closer than 1e-10 * max(1, |lambda|) use
/// h'(lambda) for the divided difference.
Eigen::MatrixXd spectral_gradient(const std::function<double(double)>& h,
                                  const std::function<double(double)>& dh, const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b);

Eigen::MatrixXd spectral_gradient(const std::function<double(double)>& h,
                                  const std::function<double(double)>& dh,
                                  const SpectralDecomposition& a, const Eigen::MatrixXd& b);

/// Inverse of g_lambda(t) = log t + t / lambda, i.e. lambda * Omega(s - log lambda).
double inverse_log_linear(double lambda, double s);

/// h(t) = t log t - t + 1 with h(0) = 1.
double entropy_kernel(double t);
/// h'(t) = log t.
double entropy_kernel_derivative(double t);

}  // namespace qrelax
