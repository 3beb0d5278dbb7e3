#include "qrelax/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qrelax/rng.hpp"

namespace qrelax {

GraphTopology::GraphTopology(GraphKind kind, int d, std::vector<Edge> edges)
    : kind_(kind), d_(d), edges_(std::move(edges)) {
  if (d < 1 || d > kMaxSpins) throw std::invalid_argument("GraphTopology: d out of range");
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i == e.j || e.i < 0 || e.j >= d)
      throw std::invalid_argument("GraphTopology: invalid edge (" + std::to_string(e.i) + "," +
                                  std::to_string(e.j) + ")");
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw std::invalid_argument("GraphTopology: duplicate edge");

  switch (kind_) {
    case GraphKind::independent:
      if (!edges_.empty()) throw std::invalid_argument("independent graph must have no edges");
      break;
    case GraphKind::complete:
      if (num_edges() != d * (d - 1) / 2) throw std::invalid_argument("complete graph is missing edges");
      break;
    case GraphKind::tree:
      if (num_edges() != d - 1 || !is_connected())
        throw std::invalid_argument("tree graph must be connected with d-1 edges");
      break;
    case GraphKind::custom:
      break;
  }
}

GraphTopology GraphTopology::independent(int d) { return {GraphKind::independent, d, {}}; }

GraphTopology GraphTopology::complete(int d) {
  std::vector<Edge> edges;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) edges.push_back({i, j});
  return {GraphKind::complete, d, std::move(edges)};
}

GraphTopology GraphTopology::custom(int d, std::vector<Edge> edges) {
  return {GraphKind::custom, d, std::move(edges)};
}

int GraphTopology::edge_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{i, j}, [](const Edge& a, const Edge& b) {
    return std::pair(a.i, a.j) < std::pair(b.i, b.j);
  });
  if (it == edges_.end() || !(*it == Edge{i, j})) return -1;
  return static_cast<int>(it - edges_.begin());
}

bool GraphTopology::is_connected() const {
  std::vector<int> parent(d_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  int components = d_;
  for (const auto& e : edges_) {
    int a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

GraphTopology random_tree(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("random_tree: d must be positive");
  if (d == 1) return {GraphKind::tree, 1, {}};
  if (d == 2) return {GraphKind::tree, 2, {{0, 1}}};

  RandomStream rng(seed);
  std::vector<int> pruefer(d - 2);
  for (auto& v : pruefer) v = static_cast<int>(rng.below(d));

  std::vector<int> degree(d, 1);
  for (int v : pruefer) ++degree[v];
  std::vector<Edge> edges;
  for (int v : pruefer) {
    int leaf = 0;
    while (degree[leaf] != 1) ++leaf;
    edges.push_back({leaf, v});
    --degree[leaf];
    --degree[v];
  }
  int u = -1;
  for (int i = 0; i < d; ++i) {
    if (degree[i] == 1) {
      if (u < 0) {
        u = i;
      } else {
        edges.push_back({u, i});
        break;
      }
    }
  }
  return {GraphKind::tree, d, std::move(edges)};
}

IsingModel::IsingModel(GraphTopology graph, Eigen::VectorXd linear, std::vector<double> couplings)
    : graph_(std::move(graph)), linear_(std::move(linear)), couplings_(std::move(couplings)) {
  if (linear_.size() != graph_.num_nodes())
    throw std::invalid_argument("IsingModel: linear term has wrong length");
  if (static_cast<int>(couplings_.size()) != graph_.num_edges())
    throw std::invalid_argument("IsingModel: one coupling per edge required");
}

double IsingModel::coupling(int i, int j) const {
  int k = graph_.edge_index(i, j);
  return k < 0 ? 0.0 : couplings_[k];
}

IsingModel IsingModel::scaled(double s) const {
  std::vector<double> c(couplings_);
  for (auto& v : c) v *= s;
  return {graph_, linear_ * s, std::move(c)};
}

double evaluate_f(const IsingModel& model, std::uint64_t state) {
  auto spin = [state](int i) { return (state >> i) & 1u ? 1.0 : -1.0; };
  double f = 0.0;
  for (int i = 0; i < model.num_spins(); ++i) f += model.linear()[i] * spin(i);
  const auto edges = model.graph().edges();
  for (std::size_t k = 0; k < edges.size(); ++k)
    f += model.couplings()[k] * spin(edges[k].i) * spin(edges[k].j);
  return f;
}

double evaluate_f(const IsingModel& model, std::span<const int> x) {
  if (static_cast<int>(x.size()) != model.num_spins())
    throw std::invalid_argument("evaluate_f: spin vector has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(model.num_spins()));
  std::uint64_t state = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 1)
      state |= std::uint64_t{1} << i;
    else if (x[i] != -1)
      throw std::invalid_argument("evaluate_f: spins must be -1 or +1");
  }
  return evaluate_f(model, state);
}

Eigen::MatrixXd parameter_matrix(const IsingModel& model, const FeatureSet& features) {
  const int d = model.num_spins();
  if (features.num_spins() != d) throw std::invalid_argument("parameter_matrix: dimension mismatch");
  if (!features.has_base_monomials())
    throw std::invalid_argument("parameter_matrix: feature set lacks the constant or a singleton");

  const int n = features.size();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  const int c = *features.position(FeatureIndex(0));
  std::vector<int> pos(d);
  for (int i = 0; i < d; ++i) pos[i] = *features.position(FeatureIndex::singleton(i));

  for (int i = 0; i < d; ++i) {
    F(c, pos[i]) += 0.5 * model.linear()[i];
    F(pos[i], c) += 0.5 * model.linear()[i];
  }
  const auto edges = model.graph().edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double half = 0.5 * model.couplings()[k];
    F(pos[edges[k].i], pos[edges[k].j]) += half;
    F(pos[edges[k].j], pos[edges[k].i]) += half;
  }
  return F;
}

IsingModel sample_parameters(const ParameterScheme& scheme, const GraphTopology& graph,
                             std::uint64_t seed) {
  if (scheme.strength < 0.0) throw std::invalid_argument("sample_parameters: negative strength");
  if (scheme.kind == SchemeKind::trw && scheme.coupling == Coupling::repulsive)
    throw std::invalid_argument("sample_parameters: TRW scheme has no repulsive coupling");

  RandomStream rng(seed);
  const int d = graph.num_nodes();
  const double w = scheme.strength;
  Eigen::VectorXd linear(d);
  std::vector<double> couplings(graph.num_edges());

  switch (scheme.kind) {
    case SchemeKind::gaussian:
      for (int i = 0; i < d; ++i) linear[i] = rng.normal();
      for (auto& c : couplings) c = rng.normal();
      break;
    case SchemeKind::logdet:
      for (int i = 0; i < d; ++i) linear[i] = rng.uniform(-0.25, 0.25);
      for (auto& c : couplings) {
        switch (scheme.coupling) {
          case Coupling::attractive: c = rng.uniform(0.0, 2.0 * w); break;
          case Coupling::mixed: c = rng.uniform(-w, w); break;
          case Coupling::repulsive: c = rng.uniform(-2.0 * w, 0.0); break;
        }
      }
      break;
    case SchemeKind::trw:
      for (int i = 0; i < d; ++i) linear[i] = rng.uniform(-0.05, 0.05);
      for (auto& c : couplings)
        c = scheme.coupling == Coupling::attractive ? rng.uniform(0.0, w) : rng.uniform(-w, w);
      break;
  }
  return {graph, std::move(linear), std::move(couplings)};
}

std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::independent: return "independent";
    case GraphKind::tree: return "tree";
    case GraphKind::complete: return "complete";
    case GraphKind::custom: return "custom";
  }
  return "?";
}

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::gaussian: return "gaussian";
    case SchemeKind::logdet: return "logdet";
    case SchemeKind::trw: return "trw";
  }
  return "?";
}

std::string to_string(Coupling c) {
  switch (c) {
    case Coupling::attractive: return "attractive";
    case Coupling::mixed: return "mixed";
    case Coupling::repulsive: return "repulsive";
  }
  return "?";
}

GraphKind parse_graph_kind(const std::string& s) {
  if (s == "independent") return GraphKind::independent;
  if (s == "tree") return GraphKind::tree;
  if (s == "complete") return GraphKind::complete;
  if (s == "custom") return GraphKind::custom;
  throw std::invalid_argument("unknown graph kind '" + s + "'");
}

SchemeKind parse_scheme_kind(const std::string& s) {
  if (s == "gaussian") return SchemeKind::gaussian;
  if (s == "logdet") return SchemeKind::logdet;
  if (s == "trw") return SchemeKind::trw;
  throw std::invalid_argument("unknown parameter scheme '" + s + "'");
}

Coupling parse_coupling(const std::string& s) {
  if (s == "attractive") return Coupling::attractive;
  if (s == "mixed") return Coupling::mixed;
  if (s == "repulsive") return Coupling::repulsive;
  throw std::invalid_argument("unknown coupling '" + s + "'");
}

void write_model(std::ostream& os, const IsingModel& model) {
  const auto old_precision = os.precision(17);
  os << "qrelax-model 1\n";
  os << "d " << model.num_spins() << '\n';
  os << "graph " << to_string(model.graph().kind()) << '\n';
  os << "linear";
  for (int i = 0; i < model.num_spins(); ++i) os << ' ' << model.linear()[i];
  os << '\n';
  os << "edges " << model.graph().num_edges() << '\n';
  const auto edges = model.graph().edges();
  for (std::size_t k = 0; k < edges.size(); ++k)
    os << edges[k].i << ' ' << edges[k].j << ' ' << model.couplings()[k] << '\n';
  os.precision(old_precision);
}

namespace {

void expect_key(std::istream& is, const std::string& key) {
  std::string tok;
  if (!(is >> tok) || tok != key)
    throw std::runtime_error("model file: expected '" + key + "', got '" + tok + "'");
}

}  // namespace

IsingModel read_model(std::istream& is) {
  expect_key(is, "qrelax-model");
  int version = 0;
  is >> version;
  if (version != 1) throw std::runtime_error("model file: unsupported version");
  int d = 0;
  expect_key(is, "d");
  is >> d;
  std::string kind;
  expect_key(is, "graph");
  is >> kind;
  expect_key(is, "linear");
  Eigen::VectorXd linear(d);
  for (int i = 0; i < d; ++i) is >> linear[i];
  int m = 0;
  expect_key(is, "edges");
  is >> m;
  std::vector<Edge> edges(m);
  std::vector<double> couplings(m);
  for (int k = 0; k < m; ++k) is >> edges[k].i >> edges[k].j >> couplings[k];
  if (!is) throw std::runtime_error("model file: truncated or malformed");

  // Edges are re-sorted by GraphTopology; carry couplings along.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (auto& e : edges)
    if (e.i > e.j) std::swap(e.i, e.j);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::pair(edges[a].i, edges[a].j) < std::pair(edges[b].i, edges[b].j);
  });
  std::vector<Edge> sorted_edges;
  std::vector<double> sorted_couplings;
  for (int k : order) {
    sorted_edges.push_back(edges[k]);
    sorted_couplings.push_back(couplings[k]);
  }
  GraphTopology graph(parse_graph_kind(kind), d, std::move(sorted_edges));
  return {std::move(graph), std::move(linear), std::move(sorted_couplings)};
}

void save_model(const std::string& path, const IsingModel& model) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_model(os, model);
}

IsingModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_model(is);
}

}  // namespace qrelax
