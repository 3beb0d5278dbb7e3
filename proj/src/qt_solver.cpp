#include "qrelax/qt_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qrelax/matfun.hpp"

namespace qrelax {

namespace {

constexpr double kClipTolerance = 1e-10;

/// t log t with clipping of tiny negative eigenvalues.
double xlogx_clipped(double t) {
  if (t < -kClipTolerance)
    throw std::domain_error("matrix is not PSD: eigenvalue " + std::to_string(t));
  return t > 0.0 ? t * std::log(t) : 0.0;
}

struct RoundedPoint {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd eigenvalues;
};

RoundedPoint round_feasible(const Eigen::MatrixXd& s, const XorClassTable& table) {
  Eigen::MatrixXd p = project_V_H(s, table);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("feasible_point: eigensolver failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  const double lmin = lam.minCoeff();
  if (lmin < 0.0) {
    // lmin < 0 <= 1 so the mixing weight lies in (0, 1).
    const double u = -lmin / (1.0 - lmin);
    p *= 1.0 - u;
    p.diagonal().array() += u;
    lam = (1.0 - u) * lam.array() + u;
    lam = lam.cwiseMax(0.0);
  }
  return {std::move(p), std::move(lam)};
}

double objective_from_spectrum(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& lam,
                               const Eigen::MatrixXd& f, double epsilon) {
  double value = (sigma.cwiseProduct(f)).sum();
  if (epsilon > 0.0) {
    double ent = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) ent += xlogx_clipped(lam[i]);
    value -= epsilon / static_cast<double>(sigma.rows()) * ent;
  }
  return value;
}

void check_problem(const Eigen::MatrixXd& f, const FeatureSet& features) {
  if (f.rows() != features.size() || f.cols() != features.size())
    throw std::invalid_argument("solver: F is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                                " but the feature set has " + std::to_string(features.size()) + " entries");
  if ((f - f.transpose()).norm() > 1e-12 * std::max(1.0, f.norm()))
    throw std::invalid_argument("solver: F must be symmetric");
}

template <class ProxG>
SolverResult run_chambolle_pock(const Eigen::MatrixXd& f, const FeatureSet& features,
                                const SolverConfig& config, bool record_trace, ProxG&& prox_g) {
  check_problem(f, features);
  const XorClassTable table = xor_class_table(features);
  const int n = features.size();

  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd x_bar = x;

  SolverResult result;
  result.bound = std::numeric_limits<double>::infinity();
  result.primal_value = -std::numeric_limits<double>::infinity();
  result.gap = std::numeric_limits<double>::infinity();

  const int interval = std::max(1, config.gap_check_interval);
  for (int k = 1; k <= config.max_iterations; ++k) {
    y = prox_Fstar(y + config.sigma * x_bar, config.sigma, table);
    Eigen::MatrixXd x_next = prox_g(x - config.tau * y);
    x_bar = x_next + config.extrapolation * (x_next - x);
    x = std::move(x_next);
    result.iterations = k;

    if (k != 1 && k % interval != 0 && k != config.max_iterations) continue;

    RoundedPoint rp = round_feasible(x, table);
    const double lower = objective_from_spectrum(rp.sigma, rp.eigenvalues, f, config.epsilon);
    const double upper = dual_certificate(y, f, config.epsilon);
    if (lower > result.primal_value) {
      result.primal_value = lower;
      result.sigma_feasible = std::move(rp.sigma);
    }
    if (upper < result.bound) {
      result.bound = upper;
      result.dual = y;
    }
    result.gap = result.bound - result.primal_value;
    if (record_trace) result.trace.push_back({k, upper, lower, result.gap});
    if (result.gap <= config.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tau > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("SolverConfig: tau and sigma must be positive");
  if (extrapolation < 0.0 || extrapolation > 1.0)
    throw std::invalid_argument("SolverConfig: extrapolation must lie in [0, 1]");
  if (extrapolation == 1.0 && !(tau * sigma < 1.0))
    throw std::invalid_argument("SolverConfig: tau * sigma must be < 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("SolverConfig: epsilon must be nonnegative");
}

double qt_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("qt_divergence: dimension mismatch");
  const auto n = static_cast<double>(a.rows());
  const SpectralDecomposition bd = spectral_decomposition(b);
  const double bmin = bd.eigenvalues.minCoeff();
  if (!(bmin > 0.0)) throw std::domain_error("qt_divergence: B must be positive definite");

  const Eigen::VectorXd inv_sqrt = bd.eigenvalues.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd b_inv_half = bd.eigenvectors * inv_sqrt.asDiagonal() * bd.eigenvectors.transpose();
  const Eigen::MatrixXd c = b_inv_half * a * b_inv_half;
  const SpectralDecomposition cd = spectral_decomposition(0.5 * (c + c.transpose()));
  Eigen::VectorXd hv(cd.eigenvalues.size());
  for (Eigen::Index i = 0; i < hv.size(); ++i) {
    const double t = cd.eigenvalues[i];
    hv[i] = xlogx_clipped(t) - std::max(t, 0.0) + 1.0;
  }
  const Eigen::MatrixXd hc = cd.eigenvectors * hv.asDiagonal() * cd.eigenvectors.transpose();
  // tr(B^{1/2} h(C) B^{1/2}) = tr(B h(C)).
  return std::max(0.0, (b.cwiseProduct(hc)).sum() / n);
}

double von_neumann_entropy_term(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("von_neumann_entropy_term: eigensolver failed");
  double total = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double t = eig.eigenvalues()[i];
    total += xlogx_clipped(t) - std::max(t, 0.0) + 1.0;
  }
  return total / static_cast<double>(s.rows());
}

Eigen::MatrixXd prox_G(const Eigen::MatrixXd& s0, double tau, const Eigen::MatrixXd& f, double epsilon) {
  if (!(tau > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("prox_G: tau and epsilon must be positive");
  const auto n = static_cast<double>(s0.rows());
  const double lambda = tau * epsilon / n;
  const double log_lambda = std::log(lambda);
  const Eigen::MatrixXd rhs = (n / epsilon) * (f + s0 / tau);
  SpectralDecomposition sd = spectral_decomposition(0.5 * (rhs + rhs.transpose()));
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i)
    sd.eigenvalues[i] = lambda * wright_omega(sd.eigenvalues[i] - log_lambda);
  return sd.reconstruct();
}

Eigen::MatrixXd prox_Fstar(const Eigen::MatrixXd& y0, double sigma, const XorClassTable& table) {
  if (!(sigma > 0.0)) throw std::invalid_argument("prox_Fstar: sigma must be positive");
  Eigen::MatrixXd pv = project_V(y0, table);
  const double shift = sigma - pv.trace() / static_cast<double>(table.n);
  Eigen::MatrixXd out = y0 - pv;
  out.diagonal().array() -= shift;
  return out;
}

Eigen::MatrixXd feasible_point(const Eigen::MatrixXd& s, const XorClassTable& table) {
  return round_feasible(s, table).sigma;
}

Eigen::VectorXd extract_marginals(const Eigen::MatrixXd& sigma, const FeatureSet& features) {
  if (!features.has_base_monomials()) throw std::invalid_argument("extract_marginals: base features missing");
  const int d = features.num_spins();
  const int c = *features.position(FeatureIndex(0));
  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) {
    const int p = *features.position(FeatureIndex::singleton(i));
    out[i] = std::clamp(0.5 * (1.0 + sigma(c, p)), 0.0, 1.0);
  }
  return out;
}

double relaxation_objective(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& f, double epsilon) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("relaxation_objective: eigensolver failed");
  return objective_from_spectrum(sigma, eig.eigenvalues(), f, epsilon);
}

double dual_certificate(const Eigen::MatrixXd& y, const Eigen::MatrixXd& f, double epsilon) {
  const auto n = static_cast<double>(y.rows());
  const Eigen::MatrixXd m = f - y;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("dual_certificate: eigensolver failed");
  const Eigen::VectorXd& mu = eig.eigenvalues();
  const double top = mu.maxCoeff();
  if (epsilon == 0.0) return y.trace() + n * top;
  // eps * log((1/n) sum exp(n mu_i / eps)), evaluated stably.
  const double scale = n / epsilon;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) sum += std::exp(scale * (mu[i] - top));
  return y.trace() + n * top + epsilon * (std::log(sum) - std::log(n));
}

SolverResult primal_dual_solve(const Eigen::MatrixXd& f, const FeatureSet& features,
                               const SolverConfig& config, bool record_trace) {
  config.validate();
  if (config.epsilon == 0.0) return zero_temperature_bound(f, features, config, record_trace);
  return run_chambolle_pock(f, features, config, record_trace, [&](const Eigen::MatrixXd& s0) {
    return prox_G(s0, config.tau, f, config.epsilon);
  });
}

SolverResult zero_temperature_bound(const Eigen::MatrixXd& f, const FeatureSet& features,
                                    const SolverConfig& config, bool record_trace) {
  config.validate();
  if (config.epsilon != 0.0) throw std::invalid_argument("zero_temperature_bound: epsilon must be 0");
  return run_chambolle_pock(f, features, config, record_trace, [&](const Eigen::MatrixXd& s0) {
    Eigen::MatrixXd shifted = s0 + config.tau * f;
    SpectralDecomposition sd = spectral_decomposition(0.5 * (shifted + shifted.transpose()));
    sd.eigenvalues = sd.eigenvalues.cwiseMax(0.0);
    return sd.reconstruct();
  });
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
  const auto old_precision = os.precision(17);
  os << "iteration,bound,primal_value,gap\n";
  for (const auto& t : trace) os << t.iteration << ',' << t.bound << ',' << t.primal_value << ',' << t.gap << '\n';
  os.precision(old_precision);
}

}  // namespace qrelax
