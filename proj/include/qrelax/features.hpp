#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qrelax {

/// Monomial exponent alpha in {0,1}^d stored as a bitmask; bit i is x_{i+1}.
struct FeatureIndex {
  std::uint64_t mask = 0;

  constexpr FeatureIndex() = default;
  constexpr explicit FeatureIndex(std::uint64_t m) : mask(m) {}

  static constexpr FeatureIndex singleton(int i) { return FeatureIndex(std::uint64_t{1} << i); }

  constexpr int degree() const { return std::popcount(mask); }
  constexpr FeatureIndex operator^(FeatureIndex o) const { return FeatureIndex(mask ^ o.mask); }
  constexpr auto operator<=>(const FeatureIndex&) const = default;
};

inline constexpr int kMaxSpins = 63;

/// Ordered set of distinct monomials. Position in the set is the row/column
/// index used by every matrix built on it.
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(int d);
  FeatureSet(int d, std::vector<FeatureIndex> items);

  int num_spins() const { return d_; }
  int size() const { return static_cast<int>(items_.size()); }
  const FeatureIndex& operator[](int i) const { return items_[i]; }
  std::span<const FeatureIndex> items() const { return items_; }

  std::optional<int> position(FeatureIndex f) const;
  bool contains(FeatureIndex f) const { return position(f).has_value(); }

  /// Appends a feature; throws if it is a duplicate or has bits above d.
  void add(FeatureIndex f);
  FeatureSet with(FeatureIndex f) const;

  /// True when 0 and every e_i are present (in any position).
  bool has_base_monomials() const;

  /// Hex masks separated by ';', e.g. "0;1;2;4;3".
  std::string to_hex() const;
  static FeatureSet from_hex(int d, const std::string& text);

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  int d_ = 0;
  std::vector<FeatureIndex> items_;
};

/// Partition of the n x n index pairs by the XOR of their monomials.
/// Built once per FeatureSet and reused by every projection.
struct XorClassTable {
  int n = 0;
  std::vector<int> class_of;            // row-major n*n
  std::vector<std::uint64_t> class_mask;
  std::vector<std::vector<std::pair<int, int>>> members;
  int zero_class = 0;

  int num_classes() const { return static_cast<int>(class_mask.size()); }
  int at(int a, int b) const { return class_of[static_cast<std::size_t>(a) * n + b]; }
};

FeatureSet base_feature_set(int d);
FeatureSet full_feature_set(int d);

XorClassTable xor_class_table(const FeatureSet& features);

/// Orthogonal projection onto V: every entry replaced by its class mean.
Eigen::MatrixXd project_V(const Eigen::MatrixXd& m, const XorClassTable& table);

/// Orthogonal projection onto V intersected with {tr = n}.
Eigen::MatrixXd project_V_H(const Eigen::MatrixXd& m, const XorClassTable& table);

/// Monomials at Hamming distance one from the set, excluding members,
/// sorted by mask value.
std::vector<FeatureIndex> distance_one_candidates(const FeatureSet& features);

/// phi_I(x) for a spin vector x in {-1,1}^d.
Eigen::VectorXd feature_vector(const FeatureSet& features, std::span<const int> x);

/// Same, with the spin configuration given as a state index (bit i set <=> x_i = +1).
Eigen::VectorXd feature_vector(const FeatureSet& features, std::uint64_t state);

std::string mask_to_hex(std::uint64_t mask);

}  // namespace qrelax
