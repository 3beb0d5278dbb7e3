#include "qrelax/features.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace qrelax {

FeatureSet::FeatureSet(int d) : d_(d) {
  if (d < 1 || d > kMaxSpins) throw std::invalid_argument("FeatureSet: d out of range");
}

FeatureSet::FeatureSet(int d, std::vector<FeatureIndex> items) : FeatureSet(d) {
  items_.reserve(items.size());
  for (auto f : items) add(f);
}

std::optional<int> FeatureSet::position(FeatureIndex f) const {
  auto it = std::find(items_.begin(), items_.end(), f);
  if (it == items_.end()) return std::nullopt;
  return static_cast<int>(it - items_.begin());
}

void FeatureSet::add(FeatureIndex f) {
  if ((f.mask >> d_) != 0)
    throw std::invalid_argument("FeatureSet: mask " + mask_to_hex(f.mask) + " has bits above d");
  if (contains(f)) throw std::invalid_argument("FeatureSet: duplicate feature " + mask_to_hex(f.mask));
  items_.push_back(f);
}

FeatureSet FeatureSet::with(FeatureIndex f) const {
  FeatureSet out = *this;
  out.add(f);
  return out;
}

bool FeatureSet::has_base_monomials() const {
  if (!contains(FeatureIndex(0))) return false;
  for (int i = 0; i < d_; ++i)
    if (!contains(FeatureIndex::singleton(i))) return false;
  return true;
}

std::string mask_to_hex(std::uint64_t mask) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(mask));
  return buf;
}

std::string FeatureSet::to_hex() const {
  std::string out;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i) out += ';';
    out += mask_to_hex(items_[i].mask);
  }
  return out;
}

FeatureSet FeatureSet::from_hex(int d, const std::string& text) {
  FeatureSet out(d);
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ';')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = std::stoull(tok, &used, 16);
    if (used != tok.size()) throw std::invalid_argument("FeatureSet: bad hex mask '" + tok + "'");
    out.add(FeatureIndex(static_cast<std::uint64_t>(v)));
  }
  return out;
}

FeatureSet base_feature_set(int d) {
  FeatureSet out(d);
  out.add(FeatureIndex(0));
  for (int i = 0; i < d; ++i) out.add(FeatureIndex::singleton(i));
  return out;
}

FeatureSet full_feature_set(int d) {
  if (d > 16) throw std::invalid_argument("full_feature_set: d too large");
  FeatureSet out = base_feature_set(d);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << d); ++m)
    if (std::popcount(m) >= 2) out.add(FeatureIndex(m));
  return out;
}

XorClassTable xor_class_table(const FeatureSet& features) {
  XorClassTable t;
  const int n = features.size();
  t.n = n;
  t.class_of.resize(static_cast<std::size_t>(n) * n);
  std::unordered_map<std::uint64_t, int> ids;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const std::uint64_t m = features[a].mask ^ features[b].mask;
      auto [it, inserted] = ids.try_emplace(m, t.num_classes());
      if (inserted) {
        t.class_mask.push_back(m);
        t.members.emplace_back();
      }
      t.class_of[static_cast<std::size_t>(a) * n + b] = it->second;
      t.members[it->second].emplace_back(a, b);
    }
  }
  t.zero_class = n > 0 ? t.at(0, 0) : 0;
  return t;
}

namespace {

void check_dims(const Eigen::MatrixXd& m, const XorClassTable& table) {
  if (m.rows() != table.n || m.cols() != table.n)
    throw std::invalid_argument("projection: matrix is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", table expects n=" +
                                std::to_string(table.n));
}

}  // namespace

Eigen::MatrixXd project_V(const Eigen::MatrixXd& m, const XorClassTable& table) {
  check_dims(m, table);
  const int n = table.n;
  std::vector<double> sum(table.num_classes(), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) sum[table.at(a, b)] += m(a, b);
  for (int c = 0; c < table.num_classes(); ++c) sum[c] /= static_cast<double>(table.members[c].size());
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out(a, b) = sum[table.at(a, b)];
  return out;
}

Eigen::MatrixXd project_V_H(const Eigen::MatrixXd& m, const XorClassTable& table) {
  Eigen::MatrixXd p = project_V(m, table);
  const double n = table.n;
  p.diagonal().array() += 1.0 - p.trace() / n;
  return p;
}

std::vector<FeatureIndex> distance_one_candidates(const FeatureSet& features) {
  std::vector<FeatureIndex> out;
  for (auto alpha : features.items())
    for (int i = 0; i < features.num_spins(); ++i) {
      FeatureIndex c = alpha ^ FeatureIndex::singleton(i);
      if (!features.contains(c)) out.push_back(c);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Eigen::VectorXd feature_vector(const FeatureSet& features, std::uint64_t state) {
  const std::uint64_t negative = ~state;
  Eigen::VectorXd phi(features.size());
  for (int a = 0; a < features.size(); ++a)
    phi[a] = (std::popcount(features[a].mask & negative) & 1) ? -1.0 : 1.0;
  return phi;
}

Eigen::VectorXd feature_vector(const FeatureSet& features, std::span<const int> x) {
  if (static_cast<int>(x.size()) != features.num_spins())
    throw std::invalid_argument("feature_vector: spin vector has wrong length");
  std::uint64_t state = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 1)
      state |= std::uint64_t{1} << i;
    else if (x[i] != -1)
      throw std::invalid_argument("feature_vector: spins must be -1 or +1");
  }
  return feature_vector(features, state);
}

}  // namespace qrelax
