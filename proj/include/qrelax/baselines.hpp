#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrelax/model.hpp"

namespace qrelax {

/// Pseudo-marginals of a pairwise binary model in moment form.
struct PseudoMarginals {
  Eigen::VectorXd mu_node;     // E[x_i]
  std::vector<double> mu_edge; // E[x_i x_j], aligned with graph edges
};

/// Edge appearance probabilities, aligned with graph edges.
struct EdgeAppearance {
  std::vector<double> rho;
};

struct BaselineResult {
  double bound = 0.0;
  Eigen::VectorXd marginals;  // p(x_i = +1)
  bool converged = false;
  int iterations = 0;
};

struct LogdetOptions {
  bool pairwise_constraints = false;
  double epsilon = 1.0;
  double tolerance = 1e-9;
};

/// Gaussian-entropy (log-determinant) relaxation over the base moment matrix:
///   sup  tr(Sigma F) + 1/2 logdet(Sigma + blkdiag(0, I_d/3)) + d/2 log(pi e / 2) - d log 2
/// with Sigma PSD, unit diagonal. The pairwise option adds
/// 1 + a mu_i + b mu_j + ab mu_ij >= 0 for every pair i < j and signs a, b.
/// For eps != 1 the result is eps * bound(f / eps).
BaselineResult logdet_bound(const IsingModel& model, const LogdetOptions& options = {});

enum class RhoMode { fixed_uniform, tree_indicator, optimize };

struct TrwOptions {
  RhoMode mode = RhoMode::fixed_uniform;
  /// Edges with rho = 1 for tree_indicator mode (all other edges get 0 and must
  /// carry a zero coupling).
  std::vector<Edge> tree_edges;
  double epsilon = 1.0;
  int max_iterations = 10000;  // sweeps per damping level
  /// Starting damping; raised towards 1 (up to three times) when sweeps do not settle.
  double damping = 0.5;
  double message_tolerance = 1e-10;
  int max_outer_iterations = 100;
  double outer_tolerance = 1e-7;
};

struct TrwResult : BaselineResult {
  EdgeAppearance rho;
  PseudoMarginals pseudo_marginals;
  std::vector<double> bound_history;  // one entry per outer step (optimize mode)
};

/// Tree-reweighted upper bound via reweighted sum-product in the log domain.
TrwResult trw_bound(const IsingModel& model, const TrwOptions& options = {});

/// TRW bound for a fixed rho; messages are warm-started from and written back
/// to `log_messages` (two directed messages per edge, two states each) when
/// it has the right size.
TrwResult trw_fixed_rho(const IsingModel& model, const EdgeAppearance& rho, const TrwOptions& options,
                        std::vector<std::array<double, 2>>* log_messages = nullptr);

/// rho <- (1 - step) rho + step * 1[maximum-weight spanning tree under weights].
EdgeAppearance spanning_tree_cg_step(const GraphTopology& graph, const std::vector<double>& weights,
                                     const EdgeAppearance& rho, double step);

/// Edges of a maximum-weight spanning tree (Kruskal, ties by edge order).
std::vector<int> max_weight_spanning_tree(const GraphTopology& graph, const std::vector<double>& weights);

/// Average of spanning-tree indicators, one tree forced through each edge.
/// Strictly positive on every edge of a connected graph.
EdgeAppearance default_edge_appearance(const GraphTopology& graph);

/// rho = (d - 1) / |E| on every edge.
EdgeAppearance uniform_edge_appearance(const GraphTopology& graph);

/// Shannon entropy of a two-state table.
double binary_entropy(double p_plus);
/// Mutual information of a 2x2 joint table indexed [x_i][x_j] with 0 <-> -1.
double mutual_information(const std::array<std::array<double, 2>, 2>& joint);

std::string to_string(RhoMode m);
RhoMode parse_rho_mode(const std::string& s);

}  // namespace qrelax
