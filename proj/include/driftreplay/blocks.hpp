#pragma once

#include <algorithm>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/record.hpp"

namespace driftreplay {

/// Chronologically contiguous, near-equal-sized blocks. When the record
/// count is not divisible, the earliest blocks take the extra records.
struct BlockSet {
  std::vector<std::vector<InteractionRecord>> blocks;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
  }
  std::int64_t first_timestamp(std::size_t b) const { return blocks.at(b).front().timestamp; }
  std::int64_t last_timestamp(std::size_t b) const { return blocks.at(b).back().timestamp; }
};

inline BlockSet split_blocks(std::vector<InteractionRecord> records, std::size_t n) {
  if (n < 2) fail(ErrorKind::InvalidConfig, "need at least 2 blocks");
  if (records.size() < n)
    fail(ErrorKind::InvalidConfig, std::to_string(records.size()) + " records cannot fill " +
                                       std::to_string(n) + " blocks");
  std::stable_sort(records.begin(), records.end(),
                   [](const InteractionRecord& a, const InteractionRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  const std::size_t base = records.size() / n;
  const std::size_t extra = records.size() % n;
  BlockSet out;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t len = base + (b < extra ? 1 : 0);
    out.blocks.emplace_back(records.begin() + static_cast<std::ptrdiff_t>(pos),
                            records.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

}  // namespace driftreplay
