#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qrelax/exact.hpp"
#include "qrelax/features.hpp"
#include "qrelax/model.hpp"
#include "qrelax/qt_solver.hpp"

namespace qrelax {

struct GreedyStep {
  FeatureIndex feature;
  double value = 0.0;     // selection objective after adding `feature`
  int candidates = 0;     // candidates considered this round
  int solves = 0;         // candidate evaluations that produced a value
};

struct GreedyTrace {
  double initial_value = 0.0;  // objective at the base feature set
  std::vector<GreedyStep> steps;
  FeatureSet final_features;
  std::vector<std::string> warnings;
};

struct GreedyOptions {
  double epsilon = 1.0;
  double coarse_tolerance = 1e-3;
  double fine_tolerance = 1e-6;
  int max_iterations = 200000;
  /// Also solve every prefix I_0, I_1, ..., I_k at the fine tolerance.
  bool fine_path = false;
};

struct GreedyBoundResult {
  GreedyTrace trace;
  SolverResult final;
  std::vector<SolverResult> path;  // filled when fine_path is set; path.back() == final
};

/// Greedy feature selection for the log-partition bound: each round adds the
/// distance-one candidate with the smallest coarse bound (ties: smallest mask).
GreedyBoundResult greedy_select_bound(const IsingModel& model, int k, const GreedyOptions& options = {});

/// Greedy selection for the KL lower bound D^QT(Sigma_p, I): each round adds
/// the candidate with the largest divergence (ties: smallest mask).
GreedyTrace greedy_select_kl(const ExactDistribution& p, int k);

/// Base set followed by masks of increasing weight, lexicographic in the
/// sorted spin-index tuple within a weight.
FeatureSet degree_ordered_features(int d, int count);

/// CSV with header "step,mask_hex,value"; step 0 is the base set.
void write_greedy_trace_csv(std::ostream& os, const GreedyTrace& trace);

}  // namespace qrelax
