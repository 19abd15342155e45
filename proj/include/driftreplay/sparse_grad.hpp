#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/param_set.hpp"

namespace driftreplay {

/// Row index marking a slice that covers an entire parameter group.
inline constexpr std::int64_t kWholeGroup = -1;

/// Which parameters a per-sample gradient covers. Selected keeps only the
/// interacting user/item embedding rows plus the final fully connected
/// layer; everything else is treated as exactly zero.
enum class ParamSelection { Full, Selected };

/// Address of one gradient slice: a single table row, or a whole group.
struct GradKey {
  std::string group;
  std::int64_t row = kWholeGroup;

  auto operator<=>(const GradKey&) const = default;
};

inline std::string to_string(const GradKey& k) {
  return k.row == kWholeGroup ? k.group : k.group + "[" + std::to_string(k.row) + "]";
}

/// Per-sample gradient with explicit support. Keys absent from the map are
/// exactly zero. Table groups are keyed per row; dense groups carry one
/// whole-group slice, so keys from the same model never mix the two forms.
class SparseGrad {
 public:
  using Map = std::map<GradKey, std::vector<double>>;

  SparseGrad() = default;

  bool empty() const { return entries_.empty(); }
  std::size_t support_size() const { return entries_.size(); }

  Map& entries() { return entries_; }
  const Map& entries() const { return entries_; }

  bool has(const GradKey& k) const { return entries_.count(k) != 0; }

  const std::vector<double>& slice(const GradKey& k) const {
    auto it = entries_.find(k);
    if (it == entries_.end()) fail(ErrorKind::ShapeMismatch, "no slice " + to_string(k));
    return it->second;
  }

  /// entries[key] += scale * values, creating the slice when absent.
  void accumulate(const GradKey& key, std::span<const double> values, double scale = 1.0) {
    auto [it, inserted] = entries_.try_emplace(key);
    auto& slot = it->second;
    if (inserted) {
      slot.assign(values.begin(), values.end());
      if (scale != 1.0)
        for (double& x : slot) x *= scale;
      return;
    }
    if (slot.size() != values.size())
      fail(ErrorKind::ShapeMismatch, "slice size for " + to_string(key));
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += scale * values[i];
  }

  /// this += scale * other. Unions supports, sums overlapping slices.
  void add(const SparseGrad& other, double scale = 1.0) {
    for (const auto& [key, values] : other.entries_) accumulate(key, values, scale);
  }

  void scale(double s) {
    for (auto& [key, values] : entries_)
      for (double& x : values) x *= s;
  }

  /// Inner product over the common support; disjoint keys contribute zero.
  double dot(const SparseGrad& other) const {
    const SparseGrad& small = support_size() <= other.support_size() ? *this : other;
    const SparseGrad& big = support_size() <= other.support_size() ? other : *this;
    double acc = 0.0;
    for (const auto& [key, values] : small.entries_) {
      auto it = big.entries_.find(key);
      if (it == big.entries_.end()) continue;
      if (it->second.size() != values.size())
        fail(ErrorKind::ShapeMismatch, "dot slice size for " + to_string(key));
      for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * it->second[i];
    }
    return acc;
  }

  /// params += alpha * this, touching only the support.
  void axpy_into(ParamSet& params, double alpha) const {
    for (const auto& [key, values] : entries_) {
      Matrix& m = params.at(key.group);
      if (key.row == kWholeGroup) {
        if (values.size() != m.size())
          fail(ErrorKind::ShapeMismatch, "group slice for " + to_string(key));
        for (std::size_t i = 0; i < values.size(); ++i) m.data[i] += alpha * values[i];
      } else {
        auto r = m.row(static_cast<std::size_t>(key.row));
        if (values.size() != r.size())
          fail(ErrorKind::ShapeMismatch, "row slice for " + to_string(key));
        for (std::size_t i = 0; i < values.size(); ++i) r[i] += alpha * values[i];
      }
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [key, values] : entries_)
      for (double x : values) m = std::max(m, std::abs(x));
    return m;
  }

  double norm2() const {
    double s = 0.0;
    for (const auto& [key, values] : entries_)
      for (double x : values) s += x * x;
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const auto& [key, values] : entries_)
      for (double x : values)
        if (!std::isfinite(x)) return false;
    return true;
  }

  std::vector<GradKey> support() const {
    std::vector<GradKey> keys;
    keys.reserve(entries_.size());
    for (const auto& [key, values] : entries_) keys.push_back(key);
    return keys;
  }

  bool operator==(const SparseGrad& o) const = default;

 private:
  Map entries_;
};

/// a - b as a fresh gradient (used by the closed-form delta checks).
inline SparseGrad sub(const SparseGrad& a, const SparseGrad& b) {
  SparseGrad out = a;
  out.add(b, -1.0);
  return out;
}

}  // namespace driftreplay
