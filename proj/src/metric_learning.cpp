#include "qrelax/metric_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qrelax/barrier.hpp"
#include "qrelax/matfun.hpp"

namespace qrelax {

namespace {

double h_clipped(double t) {
  if (t < -1e-10) throw std::domain_error("dqt_diag: A is not PSD (eigenvalue " + std::to_string(t) + ")");
  return t > 0.0 ? t * std::log(t) - t + 1.0 : 1.0;
}

}  // namespace

double dqt_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("dqt_diag: dimension mismatch");
  const SpectralDecomposition bd = spectral_decomposition(b);
  if (!(bd.eigenvalues.minCoeff() > 0.0)) throw std::domain_error("dqt_diag: B must be positive definite");
  const Eigen::VectorXd sq = bd.eigenvalues.cwiseSqrt();
  const Eigen::MatrixXd b_half = bd.eigenvectors * sq.asDiagonal() * bd.eigenvectors.transpose();
  const Eigen::MatrixXd b_inv_half = bd.eigenvectors * sq.cwiseInverse().asDiagonal() * bd.eigenvectors.transpose();
  const Eigen::MatrixXd c = b_inv_half * a * b_inv_half;
  SpectralDecomposition cd = spectral_decomposition(0.5 * (c + c.transpose()));
  for (Eigen::Index i = 0; i < cd.eigenvalues.size(); ++i) cd.eigenvalues[i] = h_clipped(cd.eigenvalues[i]);
  const Eigen::MatrixXd m = b_half * cd.reconstruct() * b_half;
  return std::max(0.0, m.diagonal().maxCoeff());
}

Eigen::MatrixXd subgradient_diag(const Eigen::MatrixXd& s) {
  const SpectralDecomposition sd = spectral_decomposition(s);
  if (!(sd.eigenvalues.minCoeff() > 0.0)) throw std::domain_error("subgradient_diag: Sigma must be positive definite");
  const Eigen::MatrixXd hs = sd.apply(entropy_kernel);
  Eigen::Index i = 0;
  hs.diagonal().maxCoeff(&i);  // first maximal index
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(s.rows(), s.cols());
  e(i, i) = 1.0;
  return spectral_gradient(entropy_kernel, entropy_kernel_derivative, sd, e);
}

KelleyResult kelley_bound(const Eigen::MatrixXd& f, const FeatureSet& features, const KelleyOptions& options) {
  const int n = features.size();
  if (f.rows() != n || f.cols() != n) throw std::invalid_argument("kelley_bound: F does not match the feature set");
  if (!(options.epsilon >= 0.0)) throw std::invalid_argument("kelley_bound: epsilon must be nonnegative");
  if (options.max_cuts < 1) throw std::invalid_argument("kelley_bound: max_cuts must be positive");
  const double eps = options.epsilon;
  const XorClassTable table = xor_class_table(features);
  const ClassCoordinates coords(table);
  const int k = coords.size();

  auto evaluate = [&](const Eigen::MatrixXd& sigma) {
    KelleyCut cut;
    cut.point = sigma;
    cut.value = -(sigma.cwiseProduct(f)).sum();
    cut.subgradient = -f;
    if (eps > 0.0) {
      const SpectralDecomposition sd = spectral_decomposition(sigma);
      cut.value += eps * sd.apply(entropy_kernel).diagonal().maxCoeff();
      cut.subgradient += eps * subgradient_diag(sigma);
    }
    return cut;
  };

  BarrierProblem master;
  master.num_extra = 1;
  master.c = Eigen::VectorXd::Zero(k + 1);
  master.c[k] = 1.0;
  master.a.resize(0, k + 1);

  KelleyState state;
  state.lower = -std::numeric_limits<double>::infinity();
  state.upper = std::numeric_limits<double>::infinity();
  KelleyResult result;

  Eigen::MatrixXd point = Eigen::MatrixXd::Identity(n, n);
  BarrierOptions bopt;
  bopt.gap_tolerance = options.inner_tolerance;
  while (true) {
    KelleyCut cut = evaluate(point);
    if (cut.value < state.upper) {
      state.upper = cut.value;
      result.sigma = cut.point;
    }
    // t >= value + <G, Sigma(z) - point>, i.e. <G, B> z - t <= <G, point> - tr G - value.
    const Eigen::Index row = master.a.rows();
    master.a.conservativeResize(row + 1, Eigen::NoChange);
    master.b.conservativeResize(row + 1);
    master.a.row(row).head(k) = coords.inner_products(cut.subgradient).transpose();
    master.a(row, k) = -1.0;
    master.b[row] = (cut.subgradient.cwiseProduct(cut.point)).sum() - cut.subgradient.trace() - cut.value;
    state.cuts.push_back(std::move(cut));

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(k + 1);
    x0[k] = (-master.b).maxCoeff() + 1.0;
    const BarrierResult r = barrier_solve(coords, master, x0, bopt);
    state.lower = std::max(state.lower, r.objective - r.gap);
    result.lower_history.push_back(state.lower);
    result.upper_history.push_back(state.upper);
    if (state.upper - state.lower < options.tolerance) {
      result.converged = true;
      break;
    }
    if (static_cast<int>(state.cuts.size()) >= options.max_cuts) break;
    point = r.sigma;
  }
  result.cuts = static_cast<int>(state.cuts.size());
  result.bound = -state.lower;
  result.primal_value = -state.upper;
  result.gap = state.upper - state.lower;
  return result;
}

}  // namespace qrelax
