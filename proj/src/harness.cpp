#include "qrelax/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrelax/exact.hpp"
#include "qrelax/greedy.hpp"
#include "qrelax/metric_learning.hpp"
#include "qrelax/parallel.hpp"
#include "qrelax/qt_solver.hpp"
#include "qrelax/rng.hpp"

namespace qrelax {

const char* const kCsvHeader =
    "experiment_id,d,graph,scheme,coupling,strength_or_epsilon,seed,method,k_features,bound,exact_value,"
    "error_bound,l1_error,gain_bound,relative_error_bound,iterations,gap,converged,wall_time_ms";

// ---------------------------------------------------------------- methods

MethodSpec parse_method(const std::string& text) {
  static const std::regex pattern(R"(^\s*([a-z_]+)\s*(?:\(\s*([a-z_0-9]*)\s*\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw ConfigError("malformed method '" + text + "'");
  const std::string name = m[1];
  const bool has_arg = m[2].matched && m[2].length() > 0;
  const std::string arg = m[2];
  auto need_count = [&](bool allow_zero) {
    if (!has_arg) throw ConfigError("method '" + name + "' needs an integer argument");
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw ConfigError("method '" + name + "': '" + arg + "' is not an integer");
    }
    if (v < (allow_zero ? 0 : 1)) throw ConfigError("method '" + name + "': argument out of range");
    return v;
  };
  auto no_arg = [&] {
    if (has_arg) throw ConfigError("method '" + name + "' takes no argument");
  };

  MethodSpec s;
  using K = MethodSpec::Kind;
  if (name == "exact") {
    no_arg();
    s.kind = K::exact;
    s.label = "exact";
  } else if (name == "qt") {
    no_arg();
    s.kind = K::qt;
    s.label = "qt";
  } else if (name == "metric_diag") {
    no_arg();
    s.kind = K::metric_diag;
    s.label = "metric_diag";
  } else if (name == "qt_greedy" || name == "qt_greedy_path") {
    s.kind = name == "qt_greedy" ? K::qt_greedy : K::qt_greedy_path;
    s.count = need_count(true);
    s.label = name + "(" + std::to_string(s.count) + ")";
  } else if (name == "qt_degree" || name == "qt_degree_path") {
    s.kind = name == "qt_degree" ? K::qt_degree : K::qt_degree_path;
    s.count = need_count(false);
    s.label = name + "(" + std::to_string(s.count) + ")";
  } else if (name == "trw") {
    s.kind = K::trw;
    try {
      s.rho = has_arg ? parse_rho_mode(arg) : RhoMode::optimize;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    s.label = "trw(" + to_string(s.rho) + ")";
  } else if (name == "logdet") {
    if (has_arg && arg != "pairwise") throw ConfigError("logdet accepts only the 'pairwise' argument");
    s.kind = K::logdet;
    s.pairwise = has_arg;
    s.label = has_arg ? "logdet(pairwise)" : "logdet";
  } else {
    throw ConfigError("unknown method '" + name + "'");
  }
  return s;
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (d < 1 || d > kMaxSpins) throw ConfigError("d must lie in [1, " + std::to_string(kMaxSpins) + "]");
  if (graph == GraphKind::custom) throw ConfigError("custom graphs are not supported in experiment configs");
  if (scheme == SchemeKind::trw && coupling == Coupling::repulsive)
    throw ConfigError("the trw scheme has no repulsive coupling");
  if (draws < 0) throw ConfigError("draws must be nonnegative");
  if (!(tolerance > 0.0) || !(coarse_tolerance > 0.0) || !(kelley_tolerance > 0.0))
    throw ConfigError("tolerances must be positive");
  if (max_iterations < 1 || trw_max_iterations < 1 || kelley_max_cuts < 1)
    throw ConfigError("iteration limits must be positive");
  if (!(trw_damping >= 0.0 && trw_damping < 1.0)) throw ConfigError("trw_damping must lie in [0, 1)");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  if (scheme != SchemeKind::gaussian && grid.empty()) throw ConfigError("grid of coupling strengths is empty");
  for (double g : grid)
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("grid values must be finite and nonnegative");

  bool zero_temperature = scheme == SchemeKind::gaussian ? false : epsilon == 0.0;
  if (scheme == SchemeKind::gaussian)
    for (double g : (grid.empty() ? std::vector<double>{epsilon} : grid)) zero_temperature |= g == 0.0;

  using K = MethodSpec::Kind;
  for (const auto& m : methods) {
    if (m.kind == K::exact && d > kMaxExactSpins)
      throw ConfigError("exact method needs d <= " + std::to_string(kMaxExactSpins));
    if ((m.kind == K::qt_degree || m.kind == K::qt_degree_path) &&
        (m.count < d + 1 || (d < 63 && m.count > (std::int64_t{1} << d))))
      throw ConfigError(m.label + ": feature count must lie in [d+1, 2^d]");
    if ((m.kind == K::trw || m.kind == K::logdet) && zero_temperature)
      throw ConfigError(m.label + " needs a positive temperature");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known = {
      "experiment_id", "d", "graph", "scheme", "coupling", "grid", "epsilon", "methods", "draws", "seed",
      "tolerance", "coarse_tolerance", "max_iterations", "trw_max_iterations", "trw_damping",
      "kelley_tolerance", "kelley_max_cuts", "output"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  try {
    if (j.contains("experiment_id")) c.experiment_id = j.at("experiment_id").get<std::string>();
    if (j.contains("d")) c.d = j.at("d").get<int>();
    if (j.contains("graph")) c.graph = parse_graph_kind(j.at("graph").get<std::string>());
    if (j.contains("scheme")) c.scheme = parse_scheme_kind(j.at("scheme").get<std::string>());
    if (j.contains("coupling")) c.coupling = parse_coupling(j.at("coupling").get<std::string>());
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("methods"))
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("draws")) c.draws = j.at("draws").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("coarse_tolerance")) c.coarse_tolerance = j.at("coarse_tolerance").get<double>();
    if (j.contains("max_iterations")) c.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("trw_max_iterations")) c.trw_max_iterations = j.at("trw_max_iterations").get<int>();
    if (j.contains("trw_damping")) c.trw_damping = j.at("trw_damping").get<double>();
    if (j.contains("kelley_tolerance")) c.kelley_tolerance = j.at("kelley_tolerance").get<double>();
    if (j.contains("kelley_max_cuts")) c.kelley_max_cuts = j.at("kelley_max_cuts").get<int>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------- metrics

Metrics compute_metrics(int d, double bound, std::optional<double> exact,
                        const std::optional<Eigen::VectorXd>& marginals,
                        const std::optional<Eigen::VectorXd>& exact_marginals,
                        std::optional<double> quantum_bound, std::optional<double> logdet_bound) {
  Metrics m;
  const double dd = d;
  if (exact) m.error_bound = (bound - *exact) / dd;
  if (marginals && exact_marginals) {
    if (marginals->size() != d || exact_marginals->size() != d)
      throw std::invalid_argument("compute_metrics: marginal vectors must have length d");
    m.l1_error = (*marginals - *exact_marginals).cwiseAbs().sum() / dd;
  }
  if (quantum_bound) m.gain_bound = (bound - *quantum_bound) / dd;
  if (logdet_bound) m.relative_error_bound = (bound - *logdet_bound) / dd;
  return m;
}

// ---------------------------------------------------------------- running

DrawSeeds draw_seeds(std::uint64_t seed, int grid_index, int draw) {
  std::uint64_t s = 0;
  for (std::uint64_t k : {seed, static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(draw)})
    s = splitmix64(s ^ k);
  return {s, splitmix64(s ^ 1)};
}

GraphTopology make_graph(GraphKind kind, int d, std::uint64_t seed) {
  switch (kind) {
    case GraphKind::independent: return GraphTopology::independent(d);
    case GraphKind::complete: return GraphTopology::complete(d);
    case GraphKind::tree: return random_tree(d, seed);
    case GraphKind::custom: break;
  }
  throw std::invalid_argument("make_graph: custom graphs need explicit edges");
}

namespace {

struct Outcome {
  std::optional<int> k_features;
  double bound = 0.0;
  std::optional<Eigen::VectorXd> marginals;
  std::optional<int> iterations;
  std::optional<double> gap;
  bool converged = false;
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Outcome from_solver(const SolverResult& r, const FeatureSet& features) {
  Outcome o;
  o.k_features = features.size();
  o.bound = r.bound;
  if (r.sigma_feasible.size() > 0) o.marginals = extract_marginals(r.sigma_feasible, features);
  o.iterations = r.iterations;
  o.gap = r.gap;
  o.converged = r.converged;
  return o;
}

/// Runs one method; path methods return several outcomes.
std::vector<Outcome> run_method(const MethodSpec& m, const IsingModel& model, double eps,
                                const ExperimentConfig& c, std::optional<double> exact,
                                const std::optional<Eigen::VectorXd>& exact_marg) {
  using K = MethodSpec::Kind;
  const int d = model.num_spins();
  SolverConfig sc;
  sc.epsilon = eps;
  sc.tolerance = c.tolerance;
  sc.max_iterations = c.max_iterations;
  auto solve = [&](const FeatureSet& fs) {
    return from_solver(primal_dual_solve(parameter_matrix(model, fs), fs, sc), fs);
  };
  GreedyOptions go;
  go.epsilon = eps;
  go.coarse_tolerance = c.coarse_tolerance;
  go.fine_tolerance = c.tolerance;
  go.max_iterations = c.max_iterations;

  switch (m.kind) {
    case K::exact: {
      Outcome o;
      o.bound = *exact;
      o.marginals = exact_marg;
      o.converged = true;
      return {o};
    }
    case K::qt:
      return {solve(base_feature_set(d))};
    case K::qt_degree:
      return {solve(degree_ordered_features(d, m.count))};
    case K::qt_degree_path: {
      std::vector<Outcome> out;
      for (int n = d + 1; n <= m.count; ++n) out.push_back(solve(degree_ordered_features(d, n)));
      return out;
    }
    case K::qt_greedy: {
      const GreedyBoundResult g = greedy_select_bound(model, m.count, go);
      return {from_solver(g.final, g.trace.final_features)};
    }
    case K::qt_greedy_path: {
      go.fine_path = true;
      const GreedyBoundResult g = greedy_select_bound(model, m.count, go);
      std::vector<Outcome> out;
      FeatureSet prefix = base_feature_set(d);
      for (std::size_t i = 0; i < g.path.size(); ++i) {
        if (i > 0) prefix.add(g.trace.steps[i - 1].feature);
        out.push_back(from_solver(g.path[i], prefix));
      }
      return out;
    }
    case K::metric_diag: {
      const FeatureSet fs = base_feature_set(d);
      KelleyOptions ko;
      ko.epsilon = eps;
      ko.tolerance = c.kelley_tolerance;
      ko.max_cuts = c.kelley_max_cuts;
      const KelleyResult r = kelley_bound(parameter_matrix(model, fs), fs, ko);
      Outcome o;
      o.k_features = fs.size();
      o.bound = r.bound;
      o.marginals = extract_marginals(r.sigma, fs);
      o.iterations = r.cuts;
      o.gap = r.gap;
      o.converged = r.converged;
      return {o};
    }
    case K::trw: {
      TrwOptions to;
      to.mode = m.rho;
      to.epsilon = eps;
      to.max_iterations = c.trw_max_iterations;
      to.damping = c.trw_damping;
      const TrwResult r = trw_bound(model, to);
      Outcome o;
      o.bound = r.bound;
      o.marginals = r.marginals;
      o.iterations = r.iterations;
      o.converged = r.converged;
      return {o};
    }
    case K::logdet: {
      LogdetOptions lo;
      lo.pairwise_constraints = m.pairwise;
      lo.epsilon = eps;
      const BaselineResult r = logdet_bound(model, lo);
      Outcome o;
      o.bound = r.bound;
      o.marginals = r.marginals;
      o.iterations = r.iterations;
      o.converged = r.converged;
      return {o};
    }
  }
  return {};
}

std::vector<ExperimentRecord> run_cell(const ExperimentConfig& c, const std::vector<double>& grid, int gi,
                                       int draw) {
  const DrawSeeds seeds = draw_seeds(c.seed, gi, draw);
  const bool gaussian = c.scheme == SchemeKind::gaussian;
  const double eps = gaussian ? grid[gi] : c.epsilon;
  const ParameterScheme scheme{c.scheme, c.coupling, gaussian ? 0.0 : grid[gi]};
  const IsingModel model = sample_parameters(scheme, make_graph(c.graph, c.d, seeds.graph), seeds.model);

  ExperimentRecord base;
  base.experiment_id = c.experiment_id;
  base.d = c.d;
  base.graph = to_string(c.graph);
  base.scheme = to_string(c.scheme);
  base.coupling = gaussian ? "" : to_string(c.coupling);
  base.strength_or_epsilon = grid[gi];
  base.seed = seeds.model;

  std::optional<double> exact;
  std::optional<Eigen::VectorXd> exact_marg;
  const bool want_exact = std::any_of(c.methods.begin(), c.methods.end(),
                                      [](const MethodSpec& m) { return m.kind == MethodSpec::Kind::exact; });
  if (want_exact) {
    if (eps > 0.0) {
      const ExactDistribution p = exact_distribution(model, eps);
      exact = log_partition(model, eps);
      exact_marg = exact_marginals(p);
    } else {
      exact = max_f(model);
    }
  }

  std::vector<ExperimentRecord> rows;
  std::vector<std::optional<Eigen::VectorXd>> marginals;
  for (const MethodSpec& m : c.methods) {
    const auto start = Clock::now();
    try {
      const std::vector<Outcome> outs = run_method(m, model, eps, c, exact, exact_marg);
      const double ms = elapsed_ms(start);
      for (const Outcome& o : outs) {
        ExperimentRecord r = base;
        r.method = m.label;
        r.k_features = o.k_features;
        r.bound = o.bound;
        r.exact_value = exact;
        r.iterations = o.iterations;
        r.gap = o.gap;
        r.converged = o.converged;
        r.wall_time_ms = ms;
        rows.push_back(std::move(r));
        marginals.push_back(o.marginals);
      }
    } catch (const std::exception& e) {
      ExperimentRecord r = base;
      r.method = m.label;
      r.exact_value = exact;
      r.converged = false;
      r.wall_time_ms = elapsed_ms(start);
      r.error = e.what();
      rows.push_back(std::move(r));
      marginals.emplace_back();
    }
  }

  // Reference bounds from the same cell.
  std::optional<double> quantum, logdet;
  for (const auto& r : rows) {
    if (r.method == "qt" && r.bound && !quantum) quantum = r.bound;
    if (r.method == "logdet" && r.bound && !logdet) logdet = r.bound;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    if (!r.bound) continue;
    const Metrics mt = compute_metrics(c.d, *r.bound, exact, marginals[i], exact_marg, quantum, logdet);
    r.error_bound = mt.error_bound;
    r.l1_error = mt.l1_error;
    r.gain_bound = mt.gain_bound;
    r.relative_error_bound = mt.relative_error_bound;
  }
  return rows;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<double> grid = config.grid;
  if (grid.empty()) grid.push_back(config.epsilon);
  const int cells = static_cast<int>(grid.size()) * config.draws;
  std::vector<std::vector<ExperimentRecord>> per_cell(cells);
  parallel_for(cells, [&](int cell) {
    per_cell[cell] = run_cell(config, grid, cell / config.draws, cell % config.draws);
  });
  std::vector<ExperimentRecord> out;
  for (auto& v : per_cell)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------- CSV

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }
std::string field(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << quoted(r.experiment_id) << ',' << r.d << ',' << r.graph << ',' << r.scheme << ',' << r.coupling << ','
       << format_double(r.strength_or_epsilon) << ',' << r.seed << ',' << quoted(r.method) << ','
       << field(r.k_features) << ',' << field(r.bound) << ',' << field(r.exact_value) << ','
       << field(r.error_bound) << ',' << field(r.l1_error) << ',' << field(r.gain_bound) << ','
       << field(r.relative_error_bound) << ',' << field(r.iterations) << ',' << field(r.gap) << ','
       << (r.converged ? "true" : "false") << ',' << format_double(r.wall_time_ms) << '\n';
  }
}

}  // namespace qrelax
