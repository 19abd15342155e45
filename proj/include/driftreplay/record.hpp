#pragma once

#include <cstdint>

#include "driftreplay/error.hpp"
#include "driftreplay/loss.hpp"

namespace driftreplay {

/// One user-item interaction event. `label` is the binarized class when a
/// labeling rule applies, kNoLabel otherwise; `rating` is always kept so a
/// single corpus serves both the regression and classification tasks.
struct InteractionRecord {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double rating = 0.0;
  int label = kNoLabel;
  std::int64_t timestamp = 0;

  static constexpr int kNoLabel = -1;

  /// Training target for the given head.
  double target(LossKind kind) const {
    if (kind == LossKind::SquaredError) return rating;
    if (label == kNoLabel)
      fail(ErrorKind::InvalidTarget, "record has no binary label");
    return static_cast<double>(label);
  }

  bool operator==(const InteractionRecord&) const = default;
};

}  // namespace driftreplay
