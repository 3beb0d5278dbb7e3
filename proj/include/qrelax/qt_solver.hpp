#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "qrelax/features.hpp"

namespace qrelax {

/// Quantum relaxation of the log-partition function
///
///   a_eps(F) = sup { tr(Sigma F) - (eps/n) tr(Sigma log Sigma) : Sigma in K' },
///   K' = { Sigma PSD, tr Sigma = n, Sigma constant on XOR classes },
///
/// solved with the Chambolle-Pock primal-dual iteration. Every dual iterate y
/// lies in V^perp + R I, which makes
///
///   U(y) = tr y + eps log( (1/n) tr exp((n/eps)(F - y)) )
///
/// a certified upper bound on a_eps(F) >= Phi_eps(f). (U is the dual objective
/// at y shifted by the optimal multiple of I.) The relaxation objective at the
/// rounded feasible point gives the matching lower value; their difference is
/// the reported gap.

struct SolverConfig {
  double tau = 3.0;
  double sigma = 0.3;
  double extrapolation = 1.0;
  double tolerance = 1e-6;
  int max_iterations = 200000;
  double epsilon = 1.0;
  /// The feasibility rounding costs two eigendecompositions, so the gap is
  /// only evaluated at iteration 1 and every gap_check_interval iterations.
  int gap_check_interval = 25;

  void validate() const;
};

struct TracePoint {
  int iteration = 0;
  double bound = 0.0;         // U at this iterate
  double primal_value = 0.0;  // objective at the rounded iterate
  double gap = 0.0;           // best bound - best primal value so far
};

struct SolverResult {
  double bound = 0.0;         // best certified upper bound
  double primal_value = 0.0;  // best relaxation objective at a feasible point
  double gap = 0.0;           // bound - primal_value
  Eigen::MatrixXd sigma_feasible;
  Eigen::MatrixXd dual;       // dual iterate that produced `bound`
  int iterations = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

/// D^QT(A, B) = (1/n) tr B^{1/2} h(B^{-1/2} A B^{-1/2}) B^{1/2}, h(t) = t log t - t + 1.
double qt_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// (1/n) tr h(S) = D^QT(S, I); equals (1/n) tr S log S when tr S = n.
double von_neumann_entropy_term(const Eigen::MatrixXd& s);

/// Proximal map of tau * G with G(S) = (eps/n) tr h(S) - tr(S F).
Eigen::MatrixXd prox_G(const Eigen::MatrixXd& s0, double tau, const Eigen::MatrixXd& f, double epsilon);

/// Proximal map of sigma * F*, F the indicator of V intersected with {tr = n}.
Eigen::MatrixXd prox_Fstar(const Eigen::MatrixXd& y0, double sigma, const XorClassTable& table);

/// Projects onto V with trace n, then mixes with I just enough to be PSD.
Eigen::MatrixXd feasible_point(const Eigen::MatrixXd& s, const XorClassTable& table);

/// p(x_i = +1) estimated as (1 + Sigma[0, e_i]) / 2, clamped to [0, 1].
Eigen::VectorXd extract_marginals(const Eigen::MatrixXd& sigma, const FeatureSet& features);

/// tr(Sigma F) - (eps/n) tr(Sigma log Sigma) for a PSD Sigma (eps >= 0).
double relaxation_objective(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& f, double epsilon);

/// U(y) above; for eps = 0 it is tr y + n lambda_max(F - y).
double dual_certificate(const Eigen::MatrixXd& y, const Eigen::MatrixXd& f, double epsilon);

/// Chambolle-Pock from x0 = I, y0 = 0. config.epsilon == 0 dispatches to
/// zero_temperature_bound.
SolverResult primal_dual_solve(const Eigen::MatrixXd& f, const FeatureSet& features,
                               const SolverConfig& config, bool record_trace = false);

/// eps = 0: a_0(F) = sup over K' of tr(Sigma F), with the entropy prox replaced
/// by S -> proj_PSD(S + tau F).
SolverResult zero_temperature_bound(const Eigen::MatrixXd& f, const FeatureSet& features,
                                    const SolverConfig& config, bool record_trace = false);

/// CSV with header "iteration,bound,primal_value,gap".
void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

}  // namespace qrelax
