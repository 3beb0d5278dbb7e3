#include "qrelax/barrier.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace qrelax {

ClassCoordinates::ClassCoordinates(const XorClassTable& table) : table_(&table) {
  coordinate_of_.assign(table.num_classes(), -1);
  for (int c = 0; c < table.num_classes(); ++c) {
    if (c == table.zero_class) continue;
    coordinate_of_[c] = static_cast<int>(class_ids_.size());
    class_ids_.push_back(c);
  }
}

Eigen::MatrixXd ClassCoordinates::matrix(const Eigen::VectorXd& z) const {
  const int n = table_->n;
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < size(); ++k)
    for (auto [a, b] : table_->members[class_ids_[k]]) s(a, b) = z[k];
  return s;
}

Eigen::VectorXd ClassCoordinates::coordinates(const Eigen::MatrixXd& sigma) const {
  Eigen::VectorXd z(size());
  for (int k = 0; k < size(); ++k) {
    double sum = 0.0;
    const auto& mem = table_->members[class_ids_[k]];
    for (auto [a, b] : mem) sum += sigma(a, b);
    z[k] = sum / static_cast<double>(mem.size());
  }
  return z;
}

Eigen::VectorXd ClassCoordinates::inner_products(const Eigen::MatrixXd& g) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int k = 0; k < size(); ++k)
    for (auto [a, b] : table_->members[class_ids_[k]]) out[k] += g(a, b);
  return out;
}

namespace {

struct Evaluation {
  double value = 0.0;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd sigma_inv;
  Eigen::MatrixXd shifted_inv;
  Eigen::VectorXd slack;
};

class BarrierObjective {
 public:
  BarrierObjective(const ClassCoordinates& coords, const BarrierProblem& p)
      : coords_(coords), p_(p), k_(coords.size()) {}

  /// Barrier objective at x, or nullopt outside the domain.
  std::optional<Evaluation> evaluate(const Eigen::VectorXd& x, double mu, bool factors) const {
    Evaluation e;
    e.sigma = coords_.matrix(x.head(k_));
    Eigen::LLT<Eigen::MatrixXd> llt(e.sigma);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const double logdet_sigma = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(logdet_sigma)) return std::nullopt;
    double value = mu * p_.c.dot(x) - logdet_sigma;
    if (p_.logdet_weight > 0.0) {
      Eigen::LLT<Eigen::MatrixXd> llt_d(e.sigma + p_.logdet_shift);
      if (llt_d.info() != Eigen::Success) return std::nullopt;
      value -= mu * p_.logdet_weight * 2.0 * llt_d.matrixLLT().diagonal().array().log().sum();
      if (factors) e.shifted_inv = llt_d.solve(Eigen::MatrixXd::Identity(e.sigma.rows(), e.sigma.cols()));
    }
    if (p_.a.rows() > 0) {
      e.slack = p_.b - p_.a * x;
      if (!(e.slack.minCoeff() > 0.0)) return std::nullopt;
      value -= e.slack.array().log().sum();
    }
    if (factors) e.sigma_inv = llt.solve(Eigen::MatrixXd::Identity(e.sigma.rows(), e.sigma.cols()));
    e.value = value;
    return e;
  }

  /// Objective without barrier terms.
  double objective(const Evaluation& e, const Eigen::VectorXd& x) const {
    double v = p_.c.dot(x);
    if (p_.logdet_weight > 0.0) {
      Eigen::LLT<Eigen::MatrixXd> llt_d(e.sigma + p_.logdet_shift);
      v -= p_.logdet_weight * 2.0 * llt_d.matrixLLT().diagonal().array().log().sum();
    }
    return v;
  }

  void derivatives(const Evaluation& e, double mu, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const int nv = static_cast<int>(p_.c.size());
    grad = mu * p_.c;
    hess = Eigen::MatrixXd::Zero(nv, nv);
    add_logdet_terms(e.sigma_inv, -1.0, 1.0, grad, hess);
    if (p_.logdet_weight > 0.0) {
      const double w = mu * p_.logdet_weight;
      add_logdet_terms(e.shifted_inv, -w, w, grad, hess);
    }
    if (p_.a.rows() > 0) {
      const Eigen::VectorXd inv = e.slack.cwiseInverse();
      grad += p_.a.transpose() * inv;
      hess += p_.a.transpose() * inv.cwiseAbs2().asDiagonal() * p_.a;
    }
  }

 private:
  // Adds gscale * tr(M B_k) to grad and hscale * tr(M B_k M B_l) to hess.
  void add_logdet_terms(const Eigen::MatrixXd& m, double gscale, double hscale, Eigen::VectorXd& grad,
                        Eigen::MatrixXd& hess) const {
    const XorClassTable& t = coords_.table();
    const int n = t.n;
    for (int k = 0; k < k_; ++k) {
      double tr = 0.0;
      for (auto [a, b] : t.members[coords_.class_id(k)]) tr += m(b, a);
      grad[k] += gscale * tr;
    }
    Eigen::MatrixXd q(n, n);
    for (int l = 0; l < k_; ++l) {
      q.setZero();
      for (auto [c, e] : t.members[coords_.class_id(l)]) q.noalias() += m.col(c) * m.row(e);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const int k = coords_.coordinate(t.at(a, b));
          if (k >= 0) hess(k, l) += hscale * q(b, a);
        }
    }
  }

  const ClassCoordinates& coords_;
  const BarrierProblem& p_;
  int k_;
};

}  // namespace

BarrierResult barrier_solve(const ClassCoordinates& coords, const BarrierProblem& problem,
                            const Eigen::VectorXd& x0, const BarrierOptions& options) {
  const int nv = coords.size() + problem.num_extra;
  if (problem.c.size() != nv || x0.size() != nv)
    throw std::invalid_argument("barrier_solve: expected " + std::to_string(nv) + " variables");
  if (problem.a.rows() > 0 && (problem.a.cols() != nv || problem.b.size() != problem.a.rows()))
    throw std::invalid_argument("barrier_solve: constraint dimensions do not match");
  if (problem.logdet_weight > 0.0 &&
      (problem.logdet_shift.rows() != coords.n() || problem.logdet_shift.cols() != coords.n()))
    throw std::invalid_argument("barrier_solve: logdet shift has wrong size");

  BarrierObjective obj(coords, problem);
  const double nu = static_cast<double>(coords.n() + problem.a.rows());
  double mu = options.mu_initial;

  BarrierResult result;
  result.x = x0;
  auto current = obj.evaluate(result.x, mu, true);
  if (!current) throw std::invalid_argument("barrier_solve: starting point is not strictly feasible");

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  while (true) {
    // Centering by damped Newton.
    for (;;) {
      if (result.newton_steps >= options.max_newton_steps) {
        result.sigma = current->sigma;
        result.objective = obj.objective(*current, result.x);
        result.gap = nu / mu;
        return result;
      }
      obj.derivatives(*current, mu, grad, hess);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd step = ldlt.solve(-grad);
      if (!step.allFinite()) throw std::runtime_error("barrier_solve: singular Newton system");
      const double decrement = -grad.dot(step);
      ++result.newton_steps;
      if (decrement <= 1e-10) break;

      double alpha = 1.0;
      std::optional<Evaluation> next;
      while (alpha > 1e-16) {
        Eigen::VectorXd trial = result.x + alpha * step;
        next = obj.evaluate(trial, mu, false);
        if (next && next->value < current->value - 0.25 * alpha * decrement) break;
        next.reset();
        alpha *= 0.5;
      }
      if (!next) break;  // no further progress possible at this precision
      result.x += alpha * step;
      current = obj.evaluate(result.x, mu, true);
    }
    if (nu / mu <= options.gap_tolerance) {
      result.converged = true;
      break;
    }
    mu *= options.mu_factor;
    current = obj.evaluate(result.x, mu, true);
  }
  result.sigma = current->sigma;
  result.objective = obj.objective(*current, result.x);
  result.gap = nu / mu;
  return result;
}

}  // namespace qrelax
