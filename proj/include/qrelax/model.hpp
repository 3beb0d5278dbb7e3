#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrelax/features.hpp"

namespace qrelax {

enum class GraphKind { independent, tree, complete, custom };

struct Edge {
  int i = 0;
  int j = 0;  // i < j
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected graph over d spins. Edges are stored with i < j, sorted.
class GraphTopology {
 public:
  GraphTopology() = default;
  GraphTopology(GraphKind kind, int d, std::vector<Edge> edges);

  static GraphTopology independent(int d);
  static GraphTopology complete(int d);
  static GraphTopology custom(int d, std::vector<Edge> edges);

  GraphKind kind() const { return kind_; }
  int num_nodes() const { return d_; }
  std::span<const Edge> edges() const { return edges_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Index of edge (i,j) in edges(), or -1.
  int edge_index(int i, int j) const;
  bool is_connected() const;

  friend bool operator==(const GraphTopology&, const GraphTopology&) = default;

 private:
  GraphKind kind_ = GraphKind::custom;
  int d_ = 0;
  std::vector<Edge> edges_;
};

/// Uniform random labeled tree on d nodes via a Pruefer sequence.
GraphTopology random_tree(int d, std::uint64_t seed);

/// Pairwise binary MRF f(x) = sum_i theta_i x_i + sum_{(i,j) in E} theta_ij x_i x_j.
/// Couplings are stored aligned with graph().edges().
class IsingModel {
 public:
  IsingModel(GraphTopology graph, Eigen::VectorXd linear, std::vector<double> couplings);

  int num_spins() const { return graph_.num_nodes(); }
  const GraphTopology& graph() const { return graph_; }
  const Eigen::VectorXd& linear() const { return linear_; }
  std::span<const double> couplings() const { return couplings_; }

  /// theta_ij for any pair; zero off the graph.
  double coupling(int i, int j) const;

  /// Same model with every parameter multiplied by s (f -> s f).
  IsingModel scaled(double s) const;

  friend bool operator==(const IsingModel&, const IsingModel&) = default;

 private:
  GraphTopology graph_;
  Eigen::VectorXd linear_;
  std::vector<double> couplings_;
};

double evaluate_f(const IsingModel& model, std::span<const int> x);

/// f at the state whose bit i is set iff x_i = +1.
double evaluate_f(const IsingModel& model, std::uint64_t state);

/// Symmetric F with phi_I(x)^T F phi_I(x) = f(x). Linear terms are split as
/// theta_i/2 on the two symmetric entries of the constant row/column.
Eigen::MatrixXd parameter_matrix(const IsingModel& model, const FeatureSet& features);

enum class SchemeKind { gaussian, logdet, trw };
enum class Coupling { attractive, mixed, repulsive };

struct ParameterScheme {
  SchemeKind kind = SchemeKind::gaussian;
  Coupling coupling = Coupling::mixed;
  double strength = 0.0;
};

IsingModel sample_parameters(const ParameterScheme& scheme, const GraphTopology& graph,
                             std::uint64_t seed);

std::string to_string(GraphKind k);
std::string to_string(SchemeKind k);
std::string to_string(Coupling c);
GraphKind parse_graph_kind(const std::string& s);
SchemeKind parse_scheme_kind(const std::string& s);
Coupling parse_coupling(const std::string& s);

/// Plain-text model format (17 significant digits, exact round trip):
///
///   qrelax-model 1
///   d 3
///   graph tree
///   linear 0.5 -0.25 0.125
///   edges 2
///   0 1 0.75
///   1 2 -1.5
void write_model(std::ostream& os, const IsingModel& model);
IsingModel read_model(std::istream& is);
void save_model(const std::string& path, const IsingModel& model);
IsingModel load_model(const std::string& path);

}  // namespace qrelax
