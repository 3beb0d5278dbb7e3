#include "qrelax/greedy.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "qrelax/parallel.hpp"

namespace qrelax {

namespace {

SolverResult solve_bound(const IsingModel& model, const FeatureSet& features, const GreedyOptions& options,
                         double tolerance) {
  SolverConfig config;
  config.epsilon = options.epsilon;
  config.tolerance = tolerance;
  config.max_iterations = options.max_iterations;
  return primal_dual_solve(parameter_matrix(model, features), features, config);
}

// Index of the best value; ties resolved by smallest mask (candidates are sorted).
template <class Better>
std::optional<int> select(const std::vector<std::optional<double>>& values, Better better) {
  std::optional<int> best;
  for (int i = 0; i < static_cast<int>(values.size()); ++i)
    if (values[i] && (!best || better(*values[i], *values[*best]))) best = i;
  return best;
}

}  // namespace

GreedyBoundResult greedy_select_bound(const IsingModel& model, int k, const GreedyOptions& options) {
  if (k < 0) throw std::invalid_argument("greedy_select_bound: k must be nonnegative");
  const int d = model.num_spins();
  GreedyBoundResult result;
  GreedyTrace& trace = result.trace;
  FeatureSet features = base_feature_set(d);

  if (options.fine_path) result.path.push_back(solve_bound(model, features, options, options.fine_tolerance));
  trace.initial_value = options.fine_path ? result.path.back().bound
                                          : solve_bound(model, features, options, options.coarse_tolerance).bound;

  for (int round = 0; round < k; ++round) {
    const std::vector<FeatureIndex> candidates = distance_one_candidates(features);
    if (candidates.empty()) {
      trace.warnings.push_back("no candidates left after " + std::to_string(round) + " rounds");
      break;
    }
    std::vector<std::optional<double>> values(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), [&](int i) {
      SolverResult r = solve_bound(model, features.with(candidates[i]), options, options.coarse_tolerance);
      if (r.converged) values[i] = r.bound;
    });
    GreedyStep step;
    step.candidates = static_cast<int>(candidates.size());
    for (const auto& v : values) step.solves += v.has_value();
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (!values[i])
        trace.warnings.push_back("candidate " + mask_to_hex(candidates[i].mask) + " did not converge; skipped");
    const auto best = select(values, [](double a, double b) { return a < b; });
    if (!best) throw std::runtime_error("greedy_select_bound: no candidate solve converged");
    step.feature = candidates[*best];
    step.value = *values[*best];
    features.add(step.feature);
    trace.steps.push_back(step);
    if (options.fine_path) result.path.push_back(solve_bound(model, features, options, options.fine_tolerance));
  }
  trace.final_features = features;
  result.final = options.fine_path ? result.path.back() : solve_bound(model, features, options, options.fine_tolerance);
  return result;
}

GreedyTrace greedy_select_kl(const ExactDistribution& p, int k) {
  if (k < 0) throw std::invalid_argument("greedy_select_kl: k must be nonnegative");
  if (p.d > 10) throw std::invalid_argument("greedy_select_kl: limited to d <= 10");
  const std::vector<double> moments = monomial_moments(p);
  FeatureSet features = base_feature_set(p.d);
  GreedyTrace trace;
  trace.initial_value = von_neumann_entropy_term(moment_matrix(moments, features));
  for (int round = 0; round < k; ++round) {
    const std::vector<FeatureIndex> candidates = distance_one_candidates(features);
    if (candidates.empty()) {
      trace.warnings.push_back("no candidates left after " + std::to_string(round) + " rounds");
      break;
    }
    std::vector<std::optional<double>> values(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), [&](int i) {
      values[i] = von_neumann_entropy_term(moment_matrix(moments, features.with(candidates[i])));
    });
    const auto best = select(values, [](double a, double b) { return a > b; });
    GreedyStep step{candidates[*best], *values[*best], static_cast<int>(candidates.size()),
                    static_cast<int>(candidates.size())};
    features.add(step.feature);
    trace.steps.push_back(step);
  }
  trace.final_features = features;
  return trace;
}

FeatureSet degree_ordered_features(int d, int count) {
  if (d < 1 || d > 30) throw std::invalid_argument("degree_ordered_features: d out of range");
  const long long total = 1ll << d;
  if (count < d + 1 || count > total)
    throw std::invalid_argument("degree_ordered_features: count must lie in [d+1, 2^d]");
  FeatureSet out = base_feature_set(d);
  for (int w = 2; w <= d && out.size() < count; ++w) {
    // Lexicographic w-subsets of {0..d-1}.
    std::vector<bool> pick(d, false);
    std::fill(pick.begin(), pick.begin() + w, true);
    do {
      std::uint64_t mask = 0;
      for (int i = 0; i < d; ++i)
        if (pick[i]) mask |= std::uint64_t{1} << i;
      out.add(FeatureIndex(mask));
    } while (out.size() < count && std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

void write_greedy_trace_csv(std::ostream& os, const GreedyTrace& trace) {
  const auto old_precision = os.precision(17);
  os << "step,mask_hex,value\n";
  os << 0 << ',' << ',' << trace.initial_value << '\n';
  for (std::size_t i = 0; i < trace.steps.size(); ++i)
    os << i + 1 << ',' << mask_to_hex(trace.steps[i].feature.mask) << ',' << trace.steps[i].value << '\n';
  os.precision(old_precision);
}

}  // namespace qrelax
