#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrelax/baselines.hpp"
#include "qrelax/model.hpp"

namespace qrelax {

/// Invalid experiment configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One entry of the `methods` list, e.g. "qt", "qt_greedy(3)", "trw(optimize)".
struct MethodSpec {
  enum class Kind { exact, qt, qt_greedy, qt_greedy_path, qt_degree, qt_degree_path, metric_diag, trw, logdet };
  Kind kind = Kind::qt;
  int count = 0;                      // k for greedy, feature count for degree
  RhoMode rho = RhoMode::optimize;    // trw
  bool pairwise = false;              // logdet
  std::string label;                  // canonical text written to the CSV
};

MethodSpec parse_method(const std::string& text);

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  int d = 5;
  GraphKind graph = GraphKind::complete;
  SchemeKind scheme = SchemeKind::gaussian;
  Coupling coupling = Coupling::mixed;
  /// Coupling strengths for logdet/trw schemes, temperatures for gaussian.
  std::vector<double> grid;
  /// Temperature for logdet/trw schemes.
  double epsilon = 1.0;
  std::vector<MethodSpec> methods;
  int draws = 10;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  double coarse_tolerance = 1e-3;
  int max_iterations = 200000;
  int trw_max_iterations = 10000;
  double trw_damping = 0.5;
  double kelley_tolerance = 1e-4;
  int kelley_max_cuts = 200;
  std::string output;

  void validate() const;
};

/// JSON object with the fields above; `methods` is a list of method strings
/// and `grid` a list of numbers. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ExperimentRecord {
  std::string experiment_id;
  int d = 0;
  std::string graph;
  std::string scheme;
  std::string coupling;
  double strength_or_epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  std::optional<int> k_features;
  std::optional<double> bound;
  std::optional<double> exact_value;
  std::optional<double> error_bound;
  std::optional<double> l1_error;
  std::optional<double> gain_bound;
  std::optional<double> relative_error_bound;
  std::optional<int> iterations;
  std::optional<double> gap;
  bool converged = false;
  double wall_time_ms = 0.0;
  /// Set when the method threw; the message is not part of the CSV.
  std::optional<std::string> error;
};

struct Metrics {
  std::optional<double> error_bound;
  std::optional<double> l1_error;
  std::optional<double> gain_bound;
  std::optional<double> relative_error_bound;
};

/// error_bound = (bound - exact)/d, l1_error = mean |p_hat - p|,
/// gain_bound = (bound - quantum)/d, relative_error_bound = (bound - logdet)/d.
Metrics compute_metrics(int d, double bound, std::optional<double> exact,
                        const std::optional<Eigen::VectorXd>& marginals,
                        const std::optional<Eigen::VectorXd>& exact_marginals,
                        std::optional<double> quantum_bound, std::optional<double> logdet_bound);

/// Seeds of one (grid point, draw) cell.
struct DrawSeeds {
  std::uint64_t model = 0;
  std::uint64_t graph = 0;
};
DrawSeeds draw_seeds(std::uint64_t seed, int grid_index, int draw);

/// Graph of the given kind; `seed` only matters for trees.
GraphTopology make_graph(GraphKind kind, int d, std::uint64_t seed);

/// Raw rows in grid order: grid point, then draw, then method (path methods
/// emit one row per feature count).
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

extern const char* const kCsvHeader;
void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records);
std::string format_double(double v);

}  // namespace qrelax
