// qrelax command-line tool.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 solver error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "qrelax/baselines.hpp"
#include "qrelax/exact.hpp"
#include "qrelax/greedy.hpp"
#include "qrelax/harness.hpp"
#include "qrelax/metric_learning.hpp"
#include "qrelax/model.hpp"
#include "qrelax/qt_solver.hpp"
#include "qrelax/rng.hpp"

namespace {

using namespace qrelax;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSolverError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

IsingModel read_model_arg(const std::string& path) {
  try {
    if (path == "-") return read_model(std::cin);
    return load_model(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  return out;
}

std::string num(double v) { return format_double(v); }

int cmd_sample(int d, const std::string& graph, const std::string& scheme, const std::string& coupling,
               double strength, std::uint64_t seed, const std::string& out_path) {
  GraphKind kind;
  ParameterScheme ps;
  try {
    kind = parse_graph_kind(graph);
    ps = {parse_scheme_kind(scheme), parse_coupling(coupling), strength};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  // Same graph seed derivation as experiment rows, so a row's seed reproduces its model.
  const IsingModel model = [&] {
    try {
      return sample_parameters(ps, make_graph(kind, d, splitmix64(seed ^ 1)), seed);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  if (out_path.empty() || out_path == "-") {
    write_model(std::cout, model);
  } else {
    auto out = open_out(out_path);
    write_model(out, model);
  }
  return kOk;
}

int cmd_exact(const std::string& model_path, double eps) {
  const IsingModel model = read_model_arg(model_path);
  if (model.num_spins() > kMaxExactSpins) throw UsageError("exact enumeration needs d <= 25");
  std::cout << "max_f " << num(max_f(model)) << '\n';
  if (eps > 0.0) {
    std::cout << "log_partition " << num(log_partition(model, eps)) << '\n';
    const Eigen::VectorXd m = exact_marginals(exact_distribution(model, eps));
    std::cout << "marginals";
    for (Eigen::Index i = 0; i < m.size(); ++i) std::cout << ' ' << num(m[i]);
    std::cout << '\n';
  }
  return kOk;
}

int cmd_bound(const std::string& method_text, const std::string& model_path, double eps, double tol, int max_iter,
              double coarse_tol) {
  const MethodSpec method = parse_method(method_text);
  const IsingModel model = read_model_arg(model_path);
  const int d = model.num_spins();

  using K = MethodSpec::Kind;
  double bound = 0.0;
  bool converged = true;
  std::optional<double> gap;
  std::optional<int> iterations;
  std::string features;
  SolverConfig sc;
  sc.epsilon = eps;
  sc.tolerance = tol;
  sc.max_iterations = max_iter;
  switch (method.kind) {
    case K::exact:
      bound = eps > 0.0 ? log_partition(model, eps) : max_f(model);
      break;
    case K::qt:
    case K::qt_degree:
    case K::qt_degree_path: {
      const FeatureSet fs = method.kind == K::qt ? base_feature_set(d) : degree_ordered_features(d, method.count);
      const SolverResult r = primal_dual_solve(parameter_matrix(model, fs), fs, sc);
      bound = r.bound, converged = r.converged, gap = r.gap, iterations = r.iterations, features = fs.to_hex();
      break;
    }
    case K::qt_greedy:
    case K::qt_greedy_path: {
      GreedyOptions go;
      go.epsilon = eps;
      go.coarse_tolerance = coarse_tol;
      go.fine_tolerance = tol;
      go.max_iterations = max_iter;
      const GreedyBoundResult r = greedy_select_bound(model, method.count, go);
      bound = r.final.bound, converged = r.final.converged, gap = r.final.gap, iterations = r.final.iterations;
      features = r.trace.final_features.to_hex();
      break;
    }
    case K::metric_diag: {
      const FeatureSet fs = base_feature_set(d);
      KelleyOptions ko;
      ko.epsilon = eps;
      const KelleyResult r = kelley_bound(parameter_matrix(model, fs), fs, ko);
      bound = r.bound, converged = r.converged, gap = r.gap, iterations = r.cuts;
      break;
    }
    case K::trw: {
      TrwOptions to;
      to.mode = method.rho;
      to.epsilon = eps;
      const TrwResult r = trw_bound(model, to);
      bound = r.bound, converged = r.converged, iterations = r.iterations;
      break;
    }
    case K::logdet: {
      LogdetOptions lo;
      lo.pairwise_constraints = method.pairwise;
      lo.epsilon = eps;
      const BaselineResult r = logdet_bound(model, lo);
      bound = r.bound, converged = r.converged, iterations = r.iterations;
      break;
    }
  }
  std::cout << "method " << method.label << '\n' << "bound " << num(bound) << '\n';
  if (gap) std::cout << "gap " << num(*gap) << '\n';
  if (iterations) std::cout << "iterations " << *iterations << '\n';
  if (!features.empty()) std::cout << "features " << features << '\n';
  std::cout << "converged " << (converged ? "true" : "false") << '\n';
  return kOk;
}

int cmd_experiment(const std::string& config_path, std::string out_path, std::optional<std::uint64_t> seed,
                   std::optional<double> tol, std::optional<int> max_iter) {
  ExperimentConfig config = load_config(config_path);
  if (seed) config.seed = *seed;
  if (tol) config.tolerance = *tol;
  if (max_iter) config.max_iterations = *max_iter;
  config.validate();
  if (out_path.empty()) out_path = config.output;
  if (out_path.empty()) throw UsageError("no output file: pass --out or set 'output' in the config");
  auto out = open_out(out_path);

  const std::vector<ExperimentRecord> records = run_experiment(config);
  write_csv(out, records);
  int failures = 0;
  for (const auto& r : records)
    if (r.error) {
      ++failures;
      std::cerr << "qrelax: " << r.method << " failed (seed " << r.seed << "): " << *r.error << '\n';
    }
  std::cerr << "qrelax: wrote " << records.size() << " rows to " << out_path << '\n';
  return failures ? kSolverError : kOk;
}

int cmd_trace(const std::string& model_path, double eps, const std::string& features_hex, double tol, int max_iter,
              const std::string& out_path) {
  const IsingModel model = read_model_arg(model_path);
  FeatureSet fs = base_feature_set(model.num_spins());
  if (!features_hex.empty()) {
    try {
      fs = FeatureSet::from_hex(model.num_spins(), features_hex);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  SolverConfig sc;
  sc.epsilon = eps;
  sc.tolerance = tol;
  sc.max_iterations = max_iter;
  const SolverResult r = primal_dual_solve(parameter_matrix(model, fs), fs, sc, true);
  if (out_path.empty() || out_path == "-") {
    write_trace_csv(std::cout, r.trace);
  } else {
    auto out = open_out(out_path);
    write_trace_csv(out, r.trace);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified upper bounds on Ising log-partition functions"};
  app.require_subcommand(1);

  double eps = 1.0, tol = 1e-6, coarse_tol = 1e-3;
  int max_iter = 200000;

  auto* sample = app.add_subcommand("sample", "Draw a random model and write it in text form");
  int d = 5;
  std::string graph = "complete", scheme = "gaussian", coupling = "mixed", out_path;
  double strength = 0.0;
  std::uint64_t seed = 0;
  sample->add_option("--d", d, "Number of spins")->required();
  sample->add_option("--graph", graph, "independent, tree or complete");
  sample->add_option("--scheme", scheme, "gaussian, logdet or trw");
  sample->add_option("--coupling", coupling, "attractive, mixed or repulsive");
  sample->add_option("--strength", strength, "Coupling strength w");
  sample->add_option("--seed", seed, "Random seed");
  sample->add_option("--out", out_path, "Output file (default stdout)");

  std::string model_path;
  auto* exact = app.add_subcommand("exact", "Brute-force log-partition, maximum and marginals");
  exact->add_option("--model", model_path, "Model file ('-' for stdin)")->required();
  exact->add_option("--epsilon", eps, "Temperature");

  std::string method;
  auto* bound = app.add_subcommand("bound", "Compute one bound");
  bound->add_option("method", method, "qt, qt_greedy(k), qt_degree(n), metric_diag, trw(mode), logdet, exact")
      ->required();
  bound->add_option("--model", model_path, "Model file ('-' for stdin)")->required();
  bound->add_option("--epsilon", eps, "Temperature");
  bound->add_option("--tol", tol, "Duality-gap tolerance");
  bound->add_option("--coarse-tol", coarse_tol, "Tolerance for greedy candidate solves");
  bound->add_option("--max-iter", max_iter, "Iteration limit");

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> tol_override;
  std::optional<int> iter_override;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment grid and write CSV");
  experiment->add_option("--config", config_path, "JSON configuration")->required();
  experiment->add_option("--out", out_path, "CSV output file");
  experiment->add_option("--seed", seed_override, "Override the config seed");
  experiment->add_option("--tol", tol_override, "Override the solver tolerance");
  experiment->add_option("--max-iter", iter_override, "Override the iteration limit");

  std::string features;
  auto* trace = app.add_subcommand("trace", "Dump the solver's duality-gap trace as CSV");
  trace->add_option("--model", model_path, "Model file ('-' for stdin)")->required();
  trace->add_option("--epsilon", eps, "Temperature");
  trace->add_option("--features", features, "Feature masks in hex separated by ';' (default: base set)");
  trace->add_option("--tol", tol, "Duality-gap tolerance");
  trace->add_option("--max-iter", max_iter, "Iteration limit");
  trace->add_option("--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sample) return cmd_sample(d, graph, scheme, coupling, strength, seed, out_path);
    if (*exact) return cmd_exact(model_path, eps);
    if (*bound) return cmd_bound(method, model_path, eps, tol, max_iter, coarse_tol);
    if (*experiment) return cmd_experiment(config_path, out_path, seed_override, tol_override, iter_override);
    if (*trace) return cmd_trace(model_path, eps, features, tol, max_iter, out_path);
  } catch (const UsageError& e) {
    std::cerr << "qrelax: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "qrelax: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "qrelax: solver error: " << e.what() << '\n';
    return kSolverError;
  }
  return kOk;
}
