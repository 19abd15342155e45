#pragma once

#include <algorithm>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/record.hpp"

namespace driftreplay {

/// Fixed-capacity, chronologically ordered store of interaction records.
class Reservoir {
 public:
  explicit Reservoir(std::size_t capacity) : capacity_(capacity) {}

  Reservoir(std::vector<InteractionRecord> records, std::size_t capacity)
      : records_(std::move(records)), capacity_(capacity) {
    if (records_.size() > capacity_)
      fail(ErrorKind::CapacityExceeded, std::to_string(records_.size()) + " records into capacity " +
                                            std::to_string(capacity_));
    std::stable_sort(records_.begin(), records_.end(),
                     [](const InteractionRecord& a, const InteractionRecord& b) {
                       return a.timestamp < b.timestamp;
                     });
  }

  const std::vector<InteractionRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }

  bool chronological() const {
    for (std::size_t i = 1; i < records_.size(); ++i)
      if (records_[i - 1].timestamp > records_[i].timestamp) return false;
    return true;
  }

 private:
  std::vector<InteractionRecord> records_;
  std::size_t capacity_ = 0;
};

/// D = kept ∪ incoming, merged chronologically. Both inputs must already
/// be in chronological order; ties keep kept-before-incoming and preserve
/// within-source order.
inline Reservoir reservoir_update(const std::vector<InteractionRecord>& kept,
                                  const std::vector<InteractionRecord>& incoming,
                                  std::size_t capacity) {
  if (kept.size() + incoming.size() > capacity)
    fail(ErrorKind::CapacityExceeded,
         std::to_string(kept.size()) + " + " + std::to_string(incoming.size()) +
             " records exceed capacity " + std::to_string(capacity));
  std::vector<InteractionRecord> merged;
  merged.reserve(kept.size() + incoming.size());
  std::merge(kept.begin(), kept.end(), incoming.begin(), incoming.end(),
             std::back_inserter(merged),
             [](const InteractionRecord& a, const InteractionRecord& b) {
               return a.timestamp < b.timestamp;
             });
  return Reservoir(std::move(merged), capacity);
}

}  // namespace driftreplay
