#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/matrix.hpp"

namespace driftreplay {

/// How a parameter group is addressed by per-sample gradients.
/// Table groups are indexed per row (one row per user/item id); dense
/// groups are always touched as a whole.
enum class GroupKind {
  Dense,      // weight matrix / bias shared by every sample
  UserTable,  // row r belongs to user id r
  ItemTable,  // row r belongs to item id r
  JointTable, // rows [0, U) are user ids, rows [U, U+I) are item ids
};

struct GroupSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  GroupKind kind = GroupKind::Dense;
};

/// Named parameter groups of a model. Iteration order is the sorted group
/// name order, which keeps every traversal deterministic.
class ParamSet {
 public:
  using Map = std::map<std::string, Matrix>;

  ParamSet() = default;

  void add_group(const std::string& name, Matrix m) {
    groups_.insert_or_assign(name, std::move(m));
  }

  bool has(const std::string& name) const { return groups_.count(name) != 0; }

  Matrix& at(const std::string& name) {
    auto it = groups_.find(name);
    if (it == groups_.end()) fail(ErrorKind::ShapeMismatch, "no parameter group " + name);
    return it->second;
  }
  const Matrix& at(const std::string& name) const {
    auto it = groups_.find(name);
    if (it == groups_.end()) fail(ErrorKind::ShapeMismatch, "no parameter group " + name);
    return it->second;
  }

  Map& groups() { return groups_; }
  const Map& groups() const { return groups_; }

  std::size_t group_count() const { return groups_.size(); }

  std::size_t total_entries() const {
    std::size_t n = 0;
    for (const auto& [name, m] : groups_) n += m.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& [name, m] : groups_)
      if (!m.all_finite()) return false;
    return true;
  }

  bool same_shape(const ParamSet& o) const {
    if (groups_.size() != o.groups_.size()) return false;
    auto a = groups_.begin();
    auto b = o.groups_.begin();
    for (; a != groups_.end(); ++a, ++b) {
      if (a->first != b->first || !a->second.same_shape(b->second)) return false;
    }
    return true;
  }

  bool operator==(const ParamSet& o) const = default;

 private:
  Map groups_;
};

}  // namespace driftreplay
