#include "qrelax/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qrelax/barrier.hpp"
#include "qrelax/qt_solver.hpp"

namespace qrelax {

namespace {

double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

void require_connected(const GraphTopology& graph, const char* who) {
  if (!graph.is_connected()) throw std::invalid_argument(std::string(who) + ": graph is not connected");
}

}  // namespace

// ---------------------------------------------------------------- log-det

BaselineResult logdet_bound(const IsingModel& model, const LogdetOptions& options) {
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("logdet_bound: epsilon must be positive");
  const int d = model.num_spins();
  const IsingModel scaled = model.scaled(1.0 / options.epsilon);
  const FeatureSet features = base_feature_set(d);
  const XorClassTable table = xor_class_table(features);
  const ClassCoordinates coords(table);
  const Eigen::MatrixXd f = parameter_matrix(scaled, features);

  BarrierProblem problem;
  problem.c = -coords.inner_products(f);
  problem.logdet_weight = 0.5;
  problem.logdet_shift = Eigen::MatrixXd::Identity(d + 1, d + 1) / 3.0;
  problem.logdet_shift(0, 0) = 0.0;

  if (options.pairwise_constraints && d >= 2) {
    const int pairs = d * (d - 1) / 2;
    problem.a = Eigen::MatrixXd::Zero(4 * pairs, coords.size());
    problem.b = Eigen::VectorXd::Ones(4 * pairs);
    int row = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        // Base order is (1, x_1, ..., x_d).
        const int ci = coords.coordinate(table.at(0, i + 1));
        const int cj = coords.coordinate(table.at(0, j + 1));
        const int cij = coords.coordinate(table.at(i + 1, j + 1));
        for (double a : {-1.0, 1.0})
          for (double b : {-1.0, 1.0}) {
            problem.a(row, ci) = -a;
            problem.a(row, cj) = -b;
            problem.a(row, cij) = -a * b;
            ++row;
          }
      }
  }

  BarrierOptions bopt;
  bopt.gap_tolerance = options.tolerance;
  const BarrierResult r = barrier_solve(coords, problem, Eigen::VectorXd::Zero(coords.size()), bopt);

  const double entropy_const = 0.5 * d * std::log(std::numbers::pi * std::numbers::e / 2.0) - d * std::numbers::ln2;
  BaselineResult out;
  out.bound = options.epsilon * (-r.objective + f.trace() + r.gap + entropy_const);
  out.marginals = extract_marginals(r.sigma, features);
  out.converged = r.converged;
  out.iterations = r.newton_steps;
  return out;
}

// ---------------------------------------------------------------- spanning trees

std::vector<int> max_weight_spanning_tree(const GraphTopology& graph, const std::vector<double>& weights) {
  if (static_cast<int>(weights.size()) != graph.num_edges())
    throw std::invalid_argument("max_weight_spanning_tree: one weight per edge required");
  require_connected(graph, "max_weight_spanning_tree");
  std::vector<int> order(graph.num_edges());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return weights[a] > weights[b]; });
  UnionFind uf(graph.num_nodes());
  std::vector<int> tree;
  for (int e : order)
    if (uf.unite(graph.edges()[e].i, graph.edges()[e].j)) tree.push_back(e);
  std::sort(tree.begin(), tree.end());
  return tree;
}

EdgeAppearance spanning_tree_cg_step(const GraphTopology& graph, const std::vector<double>& weights,
                                     const EdgeAppearance& rho, double step) {
  if (static_cast<int>(rho.rho.size()) != graph.num_edges())
    throw std::invalid_argument("spanning_tree_cg_step: rho has wrong size");
  if (!(step >= 0.0 && step <= 1.0)) throw std::invalid_argument("spanning_tree_cg_step: step must lie in [0, 1]");
  const std::vector<int> tree = max_weight_spanning_tree(graph, weights);
  EdgeAppearance out = rho;
  for (double& r : out.rho) r *= 1.0 - step;
  for (int e : tree) out.rho[e] += step;
  return out;
}

EdgeAppearance default_edge_appearance(const GraphTopology& graph) {
  require_connected(graph, "default_edge_appearance");
  const int m = graph.num_edges();
  EdgeAppearance out{std::vector<double>(m, 0.0)};
  for (int forced = 0; forced < m; ++forced) {
    UnionFind uf(graph.num_nodes());
    uf.unite(graph.edges()[forced].i, graph.edges()[forced].j);
    out.rho[forced] += 1.0;
    for (int e = 0; e < m; ++e)
      if (e != forced && uf.unite(graph.edges()[e].i, graph.edges()[e].j)) out.rho[e] += 1.0;
  }
  for (double& r : out.rho) r /= m;
  return out;
}

EdgeAppearance uniform_edge_appearance(const GraphTopology& graph) {
  const int m = graph.num_edges();
  if (m == 0) return {};
  return {std::vector<double>(m, static_cast<double>(graph.num_nodes() - 1) / m)};
}

// ---------------------------------------------------------------- entropies

double binary_entropy(double p_plus) {
  if (!(p_plus >= 0.0 && p_plus <= 1.0)) throw std::invalid_argument("binary_entropy: probability out of range");
  return -xlogx(p_plus) - xlogx(1.0 - p_plus);
}

double mutual_information(const std::array<std::array<double, 2>, 2>& joint) {
  const double r0 = joint[0][0] + joint[0][1], r1 = joint[1][0] + joint[1][1];
  const double c0 = joint[0][0] + joint[1][0], c1 = joint[0][1] + joint[1][1];
  const double rows[2] = {r0, r1}, cols[2] = {c0, c1};
  double mi = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (joint[a][b] > 0.0) mi += joint[a][b] * std::log(joint[a][b] / (rows[a] * cols[b]));
  return std::max(mi, 0.0);
}

// ---------------------------------------------------------------- TRW

namespace {

struct Neighbor {
  int node;
  int edge;
  int in_msg;   // message neighbor -> this node
  int out_msg;  // message this node -> neighbor
};

constexpr double kSpin[2] = {-1.0, 1.0};

// Per-node sum theta_s x_s + sum_v rho_vs log m_{v->s}(x_s).
std::vector<std::array<double, 2>> node_potentials(const IsingModel& model, const std::vector<double>& rho,
                                                   const std::vector<std::vector<Neighbor>>& adj,
                                                   const std::vector<std::array<double, 2>>& msg) {
  const int d = model.num_spins();
  std::vector<std::array<double, 2>> s(d);
  for (int v = 0; v < d; ++v) {
    for (int x = 0; x < 2; ++x) s[v][x] = model.linear()[v] * kSpin[x];
    for (const auto& nb : adj[v])
      for (int x = 0; x < 2; ++x) s[v][x] += rho[nb.edge] * msg[nb.in_msg][x];
  }
  return s;
}

}  // namespace

TrwResult trw_fixed_rho(const IsingModel& model, const EdgeAppearance& rho, const TrwOptions& options,
                        std::vector<std::array<double, 2>>* log_messages) {
  const GraphTopology& graph = model.graph();
  const int d = model.num_spins();
  const int m = graph.num_edges();
  if (static_cast<int>(rho.rho.size()) != m) throw std::invalid_argument("trw: rho must have one entry per edge");
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("trw: epsilon must be positive");
  if (!(options.damping >= 0.0 && options.damping < 1.0)) throw std::invalid_argument("trw: damping must lie in [0, 1)");
  for (int e = 0; e < m; ++e) {
    if (!(rho.rho[e] >= 0.0 && rho.rho[e] <= 1.0 + 1e-12)) throw std::invalid_argument("trw: rho outside [0, 1]");
    if (rho.rho[e] == 0.0 && model.couplings()[e] != 0.0)
      throw std::invalid_argument("trw: edge with rho = 0 carries a nonzero coupling");
  }
  const IsingModel scaled = model.scaled(1.0 / options.epsilon);

  // Directed messages 2e (i -> j) and 2e+1 (j -> i), each a function of the target spin.
  std::vector<std::vector<Neighbor>> adj(d);
  for (int e = 0; e < m; ++e) {
    if (rho.rho[e] == 0.0) continue;
    const Edge& ed = graph.edges()[e];
    adj[ed.i].push_back({ed.j, e, 2 * e + 1, 2 * e});
    adj[ed.j].push_back({ed.i, e, 2 * e, 2 * e + 1});
  }
  std::vector<std::array<double, 2>> local;
  std::vector<std::array<double, 2>>& msg = log_messages ? *log_messages : local;
  if (static_cast<int>(msg.size()) != 2 * m) msg.assign(2 * m, {-std::numbers::ln2, -std::numbers::ln2});

  TrwResult result;
  result.rho = rho;
  std::vector<std::array<double, 2>> next(msg.size());
  // Returns true once the undamped update moves no message by more than the tolerance.
  auto sweeps = [&](double damping) {
    for (int it = 1; it <= options.max_iterations; ++it) {
      const auto pot = node_potentials(scaled, rho.rho, adj, msg);
      double change = 0.0;
      for (int e = 0; e < m; ++e) {
        if (rho.rho[e] == 0.0) continue;
        const Edge& ed = graph.edges()[e];
        const double w = scaled.couplings()[e] / rho.rho[e];
        for (int dir = 0; dir < 2; ++dir) {
          const int src = dir == 0 ? ed.i : ed.j;
          const int reverse = dir == 0 ? 2 * e + 1 : 2 * e;  // message target -> src
          const int id = 2 * e + dir;
          std::array<double, 2> upd;
          for (int xs = 0; xs < 2; ++xs) {
            double terms[2];
            for (int xt = 0; xt < 2; ++xt)
              terms[xt] = w * kSpin[xs] * kSpin[xt] + pot[src][xt] - msg[reverse][xt];
            upd[xs] = log_sum_exp(terms[0], terms[1]);
          }
          double norm = log_sum_exp(upd[0], upd[1]);
          for (int x = 0; x < 2; ++x) {
            upd[x] -= norm;
            change = std::max(change, std::abs(upd[x] - msg[id][x]));
            upd[x] = (1.0 - damping) * upd[x] + damping * msg[id][x];
          }
          norm = log_sum_exp(upd[0], upd[1]);
          for (int x = 0; x < 2; ++x) {
            upd[x] -= norm;
            if (!std::isfinite(upd[x]))
              throw std::runtime_error("trw: non-finite message on edge (" + std::to_string(ed.i) + "," +
                                       std::to_string(ed.j) + ")");
          }
          next[id] = upd;
        }
      }
      ++result.iterations;
      if (change <= options.message_tolerance) return true;
      for (int e = 0; e < m; ++e)
        if (rho.rho[e] != 0.0) {
          msg[2 * e] = next[2 * e];
          msg[2 * e + 1] = next[2 * e + 1];
        }
    }
    return false;
  };
  // Oscillating sweeps get heavier damping, warm-started from where they stopped.
  double damping = options.damping;
  for (int attempt = 0; attempt < 4 && !result.converged; ++attempt) {
    result.converged = sweeps(damping);
    damping = 1.0 - 0.5 * (1.0 - damping);
  }

  // Beliefs and the bound at the (approximate) fixed point.
  const auto pot = node_potentials(scaled, rho.rho, adj, msg);
  result.pseudo_marginals.mu_node = Eigen::VectorXd::Zero(d);
  result.pseudo_marginals.mu_edge.assign(m, 0.0);
  result.marginals = Eigen::VectorXd::Zero(d);
  double value = -d * std::numbers::ln2;
  for (int v = 0; v < d; ++v) {
    const double lz = log_sum_exp(pot[v][0], pot[v][1]);
    const double p_plus = std::exp(pot[v][1] - lz);
    result.marginals[v] = p_plus;
    result.pseudo_marginals.mu_node[v] = 2.0 * p_plus - 1.0;
    value += scaled.linear()[v] * (2.0 * p_plus - 1.0) + binary_entropy(std::clamp(p_plus, 0.0, 1.0));
  }
  for (int e = 0; e < m; ++e) {
    const Edge& ed = graph.edges()[e];
    if (rho.rho[e] == 0.0) {
      result.pseudo_marginals.mu_edge[e] = result.pseudo_marginals.mu_node[ed.i] * result.pseudo_marginals.mu_node[ed.j];
      continue;
    }
    const double w = scaled.couplings()[e] / rho.rho[e];
    std::array<std::array<double, 2>, 2> joint;
    double lz = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        joint[a][b] = w * kSpin[a] * kSpin[b] + pot[ed.i][a] - msg[2 * e + 1][a] + pot[ed.j][b] - msg[2 * e][b];
        lz = log_sum_exp(lz, joint[a][b]);
      }
    double mu = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        joint[a][b] = std::exp(joint[a][b] - lz);
        mu += kSpin[a] * kSpin[b] * joint[a][b];
      }
    result.pseudo_marginals.mu_edge[e] = mu;
    value += scaled.couplings()[e] * mu - rho.rho[e] * mutual_information(joint);
  }
  result.bound = options.epsilon * value;
  return result;
}

namespace {

std::vector<double> edge_mutual_information(const IsingModel& model, const TrwResult& r) {
  // Recover joint tables from the moment parametrization.
  std::vector<double> out(model.graph().num_edges());
  for (int e = 0; e < model.graph().num_edges(); ++e) {
    const Edge& ed = model.graph().edges()[e];
    const double mi = r.pseudo_marginals.mu_node[ed.i];
    const double mj = r.pseudo_marginals.mu_node[ed.j];
    const double mij = r.pseudo_marginals.mu_edge[e];
    std::array<std::array<double, 2>, 2> joint;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        joint[a][b] = std::max(0.0, 0.25 * (1.0 + kSpin[a] * mi + kSpin[b] * mj + kSpin[a] * kSpin[b] * mij));
    out[e] = mutual_information(joint);
  }
  return out;
}

}  // namespace

TrwResult trw_bound(const IsingModel& model, const TrwOptions& options) {
  const GraphTopology& graph = model.graph();
  switch (options.mode) {
    case RhoMode::fixed_uniform:
      return trw_fixed_rho(model, uniform_edge_appearance(graph), options);
    case RhoMode::tree_indicator: {
      const std::vector<Edge> chosen =
          options.tree_edges.empty() ? std::vector<Edge>(graph.edges().begin(), graph.edges().end()) : options.tree_edges;
      EdgeAppearance rho{std::vector<double>(graph.num_edges(), 0.0)};
      UnionFind uf(graph.num_nodes());
      for (const Edge& ed : chosen) {
        const int e = graph.edge_index(ed.i, ed.j);
        if (e < 0) throw std::invalid_argument("trw: tree edge not in graph");
        if (!uf.unite(ed.i, ed.j)) throw std::invalid_argument("trw: tree_indicator edges contain a cycle");
        rho.rho[e] = 1.0;
      }
      return trw_fixed_rho(model, rho, options);
    }
    case RhoMode::optimize:
      break;
  }

  if (graph.num_edges() == 0) return trw_fixed_rho(model, EdgeAppearance{}, options);
  // Uniform rho is in the spanning tree polytope of a complete graph.
  EdgeAppearance rho =
      graph.kind() == GraphKind::complete ? uniform_edge_appearance(graph) : default_edge_appearance(graph);
  std::vector<std::array<double, 2>> messages;
  TrwResult best = trw_fixed_rho(model, rho, options, &messages);
  std::vector<double> history{best.bound};
  int total = best.iterations;

  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    const std::vector<double> mi = edge_mutual_information(model, best);
    const std::vector<int> tree = max_weight_spanning_tree(graph, mi);
    std::vector<double> target(graph.num_edges(), 0.0);
    for (int e : tree) target[e] = 1.0;
    double fw_gap = 0.0;
    for (int e = 0; e < graph.num_edges(); ++e) fw_gap += mi[e] * (target[e] - rho.rho[e]);
    if (fw_gap * options.epsilon <= options.outer_tolerance) break;

    bool improved = false;
    for (double step = std::min(0.5, 2.0 / (outer + 2.0)); step >= 1e-6; step *= 0.5) {
      EdgeAppearance trial = spanning_tree_cg_step(graph, mi, rho, step);
      std::vector<std::array<double, 2>> trial_messages = messages;
      TrwResult r = trw_fixed_rho(model, trial, options, &trial_messages);
      total += r.iterations;
      if (r.converged && r.bound < best.bound) {
        rho = std::move(trial);
        messages = std::move(trial_messages);
        best = std::move(r);
        history.push_back(best.bound);
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  best.iterations = total;
  best.bound_history = std::move(history);
  return best;
}

std::string to_string(RhoMode m) {
  switch (m) {
    case RhoMode::fixed_uniform: return "fixed_uniform";
    case RhoMode::tree_indicator: return "tree_indicator";
    case RhoMode::optimize: return "optimize";
  }
  return "?";
}

RhoMode parse_rho_mode(const std::string& s) {
  if (s == "fixed_uniform" || s == "uniform") return RhoMode::fixed_uniform;
  if (s == "tree_indicator" || s == "tree") return RhoMode::tree_indicator;
  if (s == "optimize") return RhoMode::optimize;
  throw std::invalid_argument("unknown rho mode '" + s + "'");
}

}  // namespace qrelax
