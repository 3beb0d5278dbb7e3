#include "qrelax/matfun.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrelax {

double wright_omega(double z) {
  if (!std::isfinite(z)) throw std::domain_error("wright_omega: non-finite argument");
  // Below this, omega = exp(z) to full double precision (omega < 1e-17).
  if (z < -40.0) return std::exp(z);

  double w;
  if (z <= -2.0) {
    w = std::exp(z);
  } else if (z >= 2.0) {
    w = z - std::log(z);
  } else {
    // Cubic minimax fit on [-3, e].
    w = 0.616522951065868 + z * (0.388418422853809 + z * (0.0534379648805832 - 0.00251076420630778 * z));
  }

  // Fritsch iteration; fourth-order, two or three steps from the guesses above.
  for (int it = 0; it < 8; ++it) {
    const double r = z - w - std::log(w);
    if (std::abs(r) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    const double wp1 = 1.0 + w;
    const double q = 2.0 * wp1 * (wp1 + (2.0 / 3.0) * r);
    w *= 1.0 + (r / wp1) * (q - r) / (q - 2.0 * r);
  }
  return w;
}

double inverse_log_linear(double lambda, double s) { return lambda * wright_omega(s - std::log(lambda)); }

double entropy_kernel(double t) { return t > 0.0 ? t * std::log(t) - t + 1.0 : 1.0; }

double entropy_kernel_derivative(double t) { return std::log(t); }

Eigen::MatrixXd SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

Eigen::MatrixXd SpectralDecomposition::apply(const std::function<double(double)>& h) const {
  Eigen::VectorXd hv(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    hv[i] = h(eigenvalues[i]);
    if (!std::isfinite(hv[i]))
      throw std::domain_error("spectral function undefined at eigenvalue " + std::to_string(eigenvalues[i]));
  }
  return eigenvectors * hv.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition spectral_decomposition(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("spectral_decomposition: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw std::runtime_error("spectral_decomposition: eigensolver failed");
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Eigen::MatrixXd spectral_apply(const std::function<double(double)>& h, const Eigen::MatrixXd& a) {
  return spectral_decomposition(a).apply(h);
}

Eigen::MatrixXd spectral_gradient(const std::function<double(double)>& h,
                                  const std::function<double(double)>& dh,
                                  const SpectralDecomposition& a, const Eigen::MatrixXd& b) {
  const Eigen::Index n = a.eigenvalues.size();
  if (b.rows() != n || b.cols() != n) throw std::invalid_argument("spectral_gradient: dimension mismatch");
  const auto& lam = a.eigenvalues;
  Eigen::VectorXd hv(n);
  for (Eigen::Index i = 0; i < n; ++i) hv[i] = h(lam[i]);

  Eigen::MatrixXd divided(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gap = lam[i] - lam[j];
      divided(i, j) = std::abs(gap) <= 1e-10 * std::max(1.0, std::abs(lam[i])) ? dh(lam[i])
                                                                              : (hv[i] - hv[j]) / gap;
    }
  }
  if (!divided.allFinite()) throw std::domain_error("spectral_gradient: derivative undefined on spectrum");

  const Eigen::MatrixXd& u = a.eigenvectors;
  const Eigen::MatrixXd b_sym = 0.5 * (b + b.transpose());
  const Eigen::MatrixXd inner = divided.cwiseProduct(u.transpose() * b_sym * u);
  return u * inner * u.transpose();
}

Eigen::MatrixXd spectral_gradient(const std::function<double(double)>& h,
                                  const std::function<double(double)>& dh, const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  return spectral_gradient(h, dh, spectral_decomposition(a), b);
}

}  // namespace qrelax
