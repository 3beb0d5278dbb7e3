#include "qrelax/exact.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qrelax {

namespace {

void check_size(int d) {
  if (d > kMaxExactSpins)
    throw std::invalid_argument("exact enumeration limited to d <= " + std::to_string(kMaxExactSpins) +
                                ", got d=" + std::to_string(d));
}

/// Visits f(x) for every state in Gray-code order, updating f in O(deg)
/// per flip and resynchronizing exactly every 1024 states.
template <class Visit>
void for_each_state(const IsingModel& model, Visit&& visit) {
  const int d = model.num_spins();
  check_size(d);
  std::vector<std::vector<std::pair<int, double>>> adj(d);
  const auto edges = model.graph().edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    adj[edges[k].i].emplace_back(edges[k].j, model.couplings()[k]);
    adj[edges[k].j].emplace_back(edges[k].i, model.couplings()[k]);
  }
  const std::uint64_t count = std::uint64_t{1} << d;
  std::uint32_t state = 0;
  double f = evaluate_f(model, state);
  visit(state, f);
  for (std::uint64_t k = 1; k < count; ++k) {
    const int i = std::countr_zero(k);
    const double xi = (state >> i) & 1u ? 1.0 : -1.0;
    double field = model.linear()[i];
    for (const auto& [j, w] : adj[i]) field += w * ((state >> j) & 1u ? 1.0 : -1.0);
    state ^= 1u << i;
    f -= 2.0 * xi * field;
    if ((k & 1023u) == 0) f = evaluate_f(model, state);
    visit(state, f);
  }
}

}  // namespace

ExactDistribution ExactDistribution::uniform(int d) {
  check_size(d);
  const std::size_t count = std::size_t{1} << d;
  return {d, std::vector<double>(count, 1.0 / static_cast<double>(count))};
}

ExactDistribution ExactDistribution::from_weights(int d, std::vector<double> weights) {
  check_size(d);
  if (weights.size() != (std::size_t{1} << d)) throw std::invalid_argument("from_weights: need 2^d weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("from_weights: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("from_weights: weights sum to zero");
  for (double& w : weights) w /= total;
  return {d, std::move(weights)};
}

double log_partition(const IsingModel& model, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("log_partition: epsilon must be positive");
  double fmax = -std::numeric_limits<double>::infinity();
  for_each_state(model, [&](std::uint32_t, double f) { fmax = std::max(fmax, f); });
  double sum = 0.0;
  for_each_state(model, [&](std::uint32_t, double f) { sum += std::exp((f - fmax) / epsilon); });
  const int d = model.num_spins();
  return fmax + epsilon * (std::log(sum) - d * std::numbers::ln2);
}

ExactDistribution exact_distribution(const IsingModel& model, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("exact_distribution: epsilon must be positive");
  const int d = model.num_spins();
  check_size(d);
  std::vector<double> f(std::size_t{1} << d);
  double fmax = -std::numeric_limits<double>::infinity();
  for_each_state(model, [&](std::uint32_t s, double v) {
    f[s] = v;
    fmax = std::max(fmax, v);
  });
  double sum = 0.0;
  for (double& v : f) {
    v = std::exp((v - fmax) / epsilon);
    sum += v;
  }
  for (double& v : f) v /= sum;
  return {d, std::move(f)};
}

double kl_divergence(const ExactDistribution& p, const ExactDistribution& q) {
  if (p.d != q.d || p.probs.size() != q.probs.size())
    throw std::invalid_argument("kl_divergence: distributions on different spaces");
  double kl = 0.0;
  for (std::size_t s = 0; s < p.probs.size(); ++s) {
    if (p.probs[s] == 0.0) continue;
    if (q.probs[s] == 0.0) throw std::domain_error("kl_divergence: p not absolutely continuous w.r.t. q");
    kl += p.probs[s] * std::log(p.probs[s] / q.probs[s]);
  }
  return std::max(kl, 0.0);
}

std::vector<double> monomial_moments(const ExactDistribution& p) {
  // E_p[x^m] = sum_s p(s) (-1)^{|m & ~s|} = (-1)^{|m|} * WHT(p)[m].
  std::vector<double> a(p.probs);
  const std::size_t count = a.size();
  for (std::size_t h = 1; h < count; h <<= 1)
    for (std::size_t i = 0; i < count; i += h << 1)
      for (std::size_t j = i; j < i + h; ++j) {
        const double u = a[j], v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
  for (std::size_t m = 0; m < count; ++m)
    if (std::popcount(m) & 1) a[m] = -a[m];
  return a;
}

Eigen::MatrixXd moment_matrix(const std::vector<double>& moments, const FeatureSet& features) {
  const int n = features.size();
  if (moments.size() != (std::size_t{1} << features.num_spins()))
    throw std::invalid_argument("moment_matrix: dimension mismatch");
  Eigen::MatrixXd sigma(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) sigma(a, b) = moments[features[a].mask ^ features[b].mask];
  return sigma;
}

Eigen::MatrixXd moment_matrix(const ExactDistribution& p, const FeatureSet& features) {
  if (p.d != features.num_spins()) throw std::invalid_argument("moment_matrix: dimension mismatch");
  return moment_matrix(monomial_moments(p), features);
}

Eigen::VectorXd exact_marginals(const ExactDistribution& p) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.d);
  for (std::size_t s = 0; s < p.probs.size(); ++s)
    for (int i = 0; i < p.d; ++i)
      if ((s >> i) & 1u) out[i] += p.probs[s];
  return out;
}

double max_f(const IsingModel& model) {
  double best = -std::numeric_limits<double>::infinity();
  for_each_state(model, [&](std::uint32_t, double f) { best = std::max(best, f); });
  return best;
}

}  // namespace qrelax
