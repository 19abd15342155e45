#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/stats.hpp"

namespace driftreplay {

inline double rmse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) fail(ErrorKind::ShapeMismatch, "rmse length mismatch");
  if (preds.empty()) fail(ErrorKind::EmptyDataset, "rmse over empty vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double d = preds[i] - targets[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

/// Mann-Whitney AUC: probability a random positive outscores a random
/// negative, ties counting one half. Computed from average ranks.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::ShapeMismatch, "auc length mismatch");
  std::size_t pos = 0, neg = 0;
  for (int l : labels) {
    if (l == 1)
      ++pos;
    else if (l == 0)
      ++neg;
    else
      fail(ErrorKind::InvalidTarget, "auc labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) fail(ErrorKind::UndefinedAuc, "need at least one of each class");

  std::vector<double> ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum_pos += ranks[i];
  double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace driftreplay
