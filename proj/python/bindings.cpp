#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qrelax/baselines.hpp"
#include "qrelax/exact.hpp"
#include "qrelax/greedy.hpp"
#include "qrelax/harness.hpp"
#include "qrelax/matfun.hpp"
#include "qrelax/metric_learning.hpp"
#include "qrelax/model.hpp"
#include "qrelax/qt_solver.hpp"
#include "qrelax/rng.hpp"

namespace py = pybind11;
using namespace qrelax;

namespace {

GraphTopology make_topology(int d, const std::string& kind, const std::vector<std::pair<int, int>>& edges) {
  std::vector<Edge> e;
  for (auto [i, j] : edges) e.push_back({std::min(i, j), std::max(i, j)});
  const GraphKind k = parse_graph_kind(kind);
  switch (k) {
    case GraphKind::independent: return GraphTopology::independent(d);
    case GraphKind::complete: return GraphTopology::complete(d);
    default: return GraphTopology(k, d, std::move(e));
  }
}

FeatureSet features_from(int d, const std::optional<std::vector<std::uint64_t>>& masks) {
  if (!masks) return base_feature_set(d);
  std::vector<FeatureIndex> items;
  for (auto m : *masks) items.emplace_back(m);
  return FeatureSet(d, std::move(items));
}

std::vector<std::uint64_t> masks_of(const FeatureSet& fs) {
  std::vector<std::uint64_t> out;
  for (auto f : fs.items()) out.push_back(f.mask);
  return out;
}

}  // namespace

PYBIND11_MODULE(_qrelax, m) {
  m.doc() = "Certified upper bounds on Ising log-partition functions";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<IsingModel>(m, "IsingModel")
      .def(py::init([](int d, const std::string& graph, const Eigen::VectorXd& linear,
                       const std::vector<double>& couplings, const std::vector<std::pair<int, int>>& edges) {
             return IsingModel(make_topology(d, graph, edges), linear, couplings);
           }),
           py::arg("d"), py::arg("graph"), py::arg("linear"), py::arg("couplings"),
           py::arg("edges") = std::vector<std::pair<int, int>>{},
           "Edges are only read for tree and custom graphs; couplings follow the sorted (i < j) edge order.")
      .def_property_readonly("d", &IsingModel::num_spins)
      .def_property_readonly("linear", &IsingModel::linear)
      .def_property_readonly("couplings",
                             [](const IsingModel& s) { return std::vector<double>(s.couplings().begin(), s.couplings().end()); })
      .def_property_readonly("edges",
                             [](const IsingModel& s) {
                               std::vector<std::pair<int, int>> out;
                               for (const Edge& e : s.graph().edges()) out.emplace_back(e.i, e.j);
                               return out;
                             })
      .def_property_readonly("graph", [](const IsingModel& s) { return to_string(s.graph().kind()); })
      .def("energy", [](const IsingModel& s, const std::vector<int>& x) { return evaluate_f(s, x); }, py::arg("x"))
      .def("to_text",
           [](const IsingModel& s) {
             std::ostringstream os;
             write_model(os, s);
             return os.str();
           })
      .def_static("from_text",
                  [](const std::string& text) {
                    std::istringstream is(text);
                    return read_model(is);
                  })
      .def("__eq__", [](const IsingModel& a, const IsingModel& b) { return a == b; });

  m.def(
      "sample_model",
      [](int d, const std::string& graph, const std::string& scheme, const std::string& coupling, double strength,
         std::uint64_t seed) {
        const ParameterScheme ps{parse_scheme_kind(scheme), parse_coupling(coupling), strength};
        return sample_parameters(ps, make_graph(parse_graph_kind(graph), d, splitmix64(seed ^ 1)), seed);
      },
      py::arg("d"), py::arg("graph") = "complete", py::arg("scheme") = "gaussian", py::arg("coupling") = "mixed",
      py::arg("strength") = 0.0, py::arg("seed") = 0);

  m.def("log_partition", &log_partition, py::arg("model"), py::arg("epsilon") = 1.0);
  m.def("max_f", &max_f, py::arg("model"));
  m.def(
      "exact_marginals",
      [](const IsingModel& model, double eps) { return exact_marginals(exact_distribution(model, eps)); },
      py::arg("model"), py::arg("epsilon") = 1.0);

  m.def("base_features", [](int d) { return masks_of(base_feature_set(d)); }, py::arg("d"));
  m.def("full_features", [](int d) { return masks_of(full_feature_set(d)); }, py::arg("d"));
  m.def("degree_ordered_features", [](int d, int count) { return masks_of(degree_ordered_features(d, count)); },
        py::arg("d"), py::arg("count"));
  m.def(
      "parameter_matrix",
      [](const IsingModel& model, std::optional<std::vector<std::uint64_t>> features) {
        return parameter_matrix(model, features_from(model.num_spins(), features));
      },
      py::arg("model"), py::arg("features") = py::none());

  py::class_<SolverResult>(m, "SolverResult")
      .def_readonly("bound", &SolverResult::bound)
      .def_readonly("primal_value", &SolverResult::primal_value)
      .def_readonly("gap", &SolverResult::gap)
      .def_readonly("iterations", &SolverResult::iterations)
      .def_readonly("converged", &SolverResult::converged)
      .def_readonly("sigma", &SolverResult::sigma_feasible)
      .def_property_readonly("trace", [](const SolverResult& r) {
        std::vector<std::tuple<int, double, double, double>> out;
        for (const auto& t : r.trace) out.emplace_back(t.iteration, t.bound, t.primal_value, t.gap);
        return out;
      });

  m.def(
      "qt_bound",
      [](const IsingModel& model, std::optional<std::vector<std::uint64_t>> features, double epsilon,
         double tolerance, int max_iterations, bool trace) {
        const FeatureSet fs = features_from(model.num_spins(), features);
        SolverConfig c;
        c.epsilon = epsilon;
        c.tolerance = tolerance;
        c.max_iterations = max_iterations;
        py::gil_scoped_release release;
        return primal_dual_solve(parameter_matrix(model, fs), fs, c, trace);
      },
      py::arg("model"), py::arg("features") = py::none(), py::arg("epsilon") = 1.0, py::arg("tolerance") = 1e-6,
      py::arg("max_iterations") = 200000, py::arg("trace") = false);

  m.def(
      "greedy_bound",
      [](const IsingModel& model, int k, double epsilon, double tolerance, double coarse_tolerance) {
        GreedyOptions o;
        o.epsilon = epsilon;
        o.fine_tolerance = tolerance;
        o.coarse_tolerance = coarse_tolerance;
        GreedyBoundResult r;
        {
          py::gil_scoped_release release;
          r = greedy_select_bound(model, k, o);
        }
        return py::make_tuple(r.final, masks_of(r.trace.final_features), r.trace.warnings);
      },
      py::arg("model"), py::arg("k"), py::arg("epsilon") = 1.0, py::arg("tolerance") = 1e-6,
      py::arg("coarse_tolerance") = 1e-3, "Returns (SolverResult, feature masks, warnings).");

  py::class_<KelleyResult>(m, "KelleyResult")
      .def_readonly("bound", &KelleyResult::bound)
      .def_readonly("primal_value", &KelleyResult::primal_value)
      .def_readonly("gap", &KelleyResult::gap)
      .def_readonly("converged", &KelleyResult::converged)
      .def_readonly("cuts", &KelleyResult::cuts);
  m.def(
      "metric_diag_bound",
      [](const IsingModel& model, double epsilon, double tolerance, int max_cuts) {
        const FeatureSet fs = base_feature_set(model.num_spins());
        KelleyOptions o;
        o.epsilon = epsilon;
        o.tolerance = tolerance;
        o.max_cuts = max_cuts;
        py::gil_scoped_release release;
        return kelley_bound(parameter_matrix(model, fs), fs, o);
      },
      py::arg("model"), py::arg("epsilon") = 1.0, py::arg("tolerance") = 1e-4, py::arg("max_cuts") = 200);

  py::class_<BaselineResult>(m, "BaselineResult")
      .def_readonly("bound", &BaselineResult::bound)
      .def_readonly("marginals", &BaselineResult::marginals)
      .def_readonly("converged", &BaselineResult::converged)
      .def_readonly("iterations", &BaselineResult::iterations);
  py::class_<TrwResult, BaselineResult>(m, "TrwResult")
      .def_property_readonly("rho", [](const TrwResult& r) { return r.rho.rho; })
      .def_readonly("bound_history", &TrwResult::bound_history);

  m.def(
      "logdet_bound",
      [](const IsingModel& model, bool pairwise, double epsilon) {
        LogdetOptions o;
        o.pairwise_constraints = pairwise;
        o.epsilon = epsilon;
        return logdet_bound(model, o);
      },
      py::arg("model"), py::arg("pairwise") = false, py::arg("epsilon") = 1.0);
  m.def(
      "trw_bound",
      [](const IsingModel& model, const std::string& rho, double epsilon) {
        TrwOptions o;
        o.mode = parse_rho_mode(rho);
        o.epsilon = epsilon;
        py::gil_scoped_release release;
        return trw_bound(model, o);
      },
      py::arg("model"), py::arg("rho") = "optimize", py::arg("epsilon") = 1.0);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig c = parse_config(config_json);
        std::vector<ExperimentRecord> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(c);
        }
        std::ostringstream os;
        write_csv(os, rows);
        return os.str();
      },
      py::arg("config_json"), "Runs an experiment from a JSON config and returns the CSV text.");
  m.attr("CSV_HEADER") = kCsvHeader;

  m.def("wright_omega", &wright_omega, py::arg("z"));
  m.def("qt_divergence", &qt_divergence, py::arg("a"), py::arg("b"));
}
