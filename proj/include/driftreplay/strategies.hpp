#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "driftreplay/influence.hpp"
#include "driftreplay/optim.hpp"
#include "driftreplay/rec_model.hpp"
#include "driftreplay/record.hpp"
#include "driftreplay/train.hpp"

namespace driftreplay {

/// How many records a stage keeps from the reservoir, split across the
/// two score extremes.
struct SelectionPlan {
  std::size_t keep = 0;       // K
  std::size_t keep_low = 0;   // floor(K/2)
  std::size_t keep_high = 0;  // ceil(K/2)

  static SelectionPlan of(std::size_t k) { return {k, k / 2, k - k / 2}; }

  /// Default protocol sizing: K = M - M'.
  static SelectionPlan for_capacity(std::size_t capacity, std::size_t incoming) {
    if (incoming > capacity)
      fail(ErrorKind::CapacityExceeded, "incoming block larger than the reservoir capacity");
    return of(capacity - incoming);
  }

  /// Replay-ratio sizing: K = round(ratio * M).
  static SelectionPlan for_ratio(std::size_t capacity, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) fail(ErrorKind::InvalidConfig, "replay ratio outside [0,1]");
    return of(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(capacity))));
  }
};

/// Greedy keep-both-ends selection: indices of the floor(K/2) lowest and
/// ceil(K/2) highest scores. Ties break on the original index (stable
/// non-decreasing sort), so the result is deterministic. Returns indices
/// in ascending order.
inline std::vector<std::size_t> select_extreme(std::span<const ScoreEntry> scores, std::size_t k) {
  if (k > scores.size())
    fail(ErrorKind::KTooLarge, "K=" + std::to_string(k) + " > " + std::to_string(scores.size()));
  for (const ScoreEntry& s : scores)
    if (!std::isfinite(s.score)) fail(ErrorKind::NonFiniteScore, "score at index " + std::to_string(s.index));

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].score < scores[b].score;
  });

  const std::size_t low = k / 2;
  const std::size_t high = k - low;
  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t i = 0; i < low; ++i) picked.push_back(scores[order[i]].index);
  for (std::size_t i = scores.size() - high; i < scores.size(); ++i)
    picked.push_back(scores[order[i]].index);
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace detail {
inline std::vector<InteractionRecord> take(const std::vector<InteractionRecord>& data,
                                           const std::vector<std::size_t>& indices) {
  std::vector<InteractionRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data[i]);
  return out;
}

/// Smallest-K selection under a (value, index) tie-break; returns the
/// chosen indices in ascending index order.
inline std::vector<std::size_t> smallest_k(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(picked.begin(), picked.end());
  return picked;
}
}  // namespace detail

/// MEGG with precomputed scores (the harness path, where the scheme
/// supplies theta and V).
inline std::vector<InteractionRecord> megg_select_scored(const std::vector<InteractionRecord>& data,
                                                         std::span<const ScoreEntry> scores,
                                                         std::size_t k) {
  return detail::take(data, select_extreme(scores, k));
}

/// Full MEGG pipeline: V at convergence, scores just before convergence,
/// keep both score extremes.
template <class Model>
std::vector<InteractionRecord> megg_select(const std::vector<InteractionRecord>& data,
                                           const TrainingSnapshots& snapshots, const Model& model,
                                           std::size_t k, LossKind kind, ParamSelection sel) {
  ReferenceVector v = reference_vector(model, data, snapshots.theta_hat, kind, sel);
  std::vector<ScoreEntry> scores =
      ggscore_batch(model, data, snapshots.theta_hat_prime, v, kind, sel);
  return megg_select_scored(data, scores, k);
}

/// Uniform sample without replacement; deterministic in the engine state.
inline std::vector<InteractionRecord> gdumb_select(const std::vector<InteractionRecord>& data,
                                                   std::size_t k, std::mt19937& rng) {
  if (k > data.size()) fail(ErrorKind::KTooLarge, "K exceeds the reservoir size");
  std::vector<std::size_t> pool(data.size());
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<std::size_t> picked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(picked.begin(), picked.end());
  return detail::take(data, picked);
}

/// Keeps the records closest to the mean feature vector at theta_hat.
template <class Model>
std::vector<InteractionRecord> icarl_select(const std::vector<InteractionRecord>& data,
                                            std::size_t k, const Model& model,
                                            const ParamSet& theta_hat) {
  if (k > data.size()) fail(ErrorKind::KTooLarge, "K exceeds the reservoir size");
  if (data.empty()) return {};
  std::vector<std::vector<double>> features(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    features[i] = model.extract_feature(theta_hat, data[i]);
  });
  const std::size_t dim = features.front().size();
  std::vector<double> center(dim, 0.0);
  for (const auto& f : features)
    for (std::size_t c = 0; c < dim; ++c) center[c] += f[c];
  for (double& x : center) x /= static_cast<double>(data.size());

  std::vector<double> dist(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      double d = features[i][c] - center[c];
      s += d * d;
    }
    dist[i] = s;
  }
  return detail::take(data, detail::smallest_k(dist, k));
}

/// Keeps the records whose loss degrades most under the foreseen update:
/// one mean-gradient MBGD step over the incoming block.
template <class Model>
std::vector<InteractionRecord> mir_select(const std::vector<InteractionRecord>& data,
                                          std::size_t k, const Model& model,
                                          const ParamSet& theta_hat,
                                          const std::vector<InteractionRecord>& incoming,
                                          double alpha, LossKind kind) {
  if (k > data.size()) fail(ErrorKind::KTooLarge, "K exceeds the reservoir size");
  if (incoming.empty()) fail(ErrorKind::EmptyIncrement, "MIR needs a non-empty incoming block");
  SparseGrad g = batch_grad(model, theta_hat, incoming, kind);
  ParamSet foreseen = apply_mbgd(theta_hat, g, alpha);

  std::vector<double> neg_delta(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    double before = loss_value(model.forward(theta_hat, data[i]), data[i].target(kind), kind);
    double after = loss_value(model.forward(foreseen, data[i]), data[i].target(kind), kind);
    neg_delta[i] = -(after - before);  // most-impacted first under smallest_k
  });
  return detail::take(data, detail::smallest_k(neg_delta, k));
}

}  // namespace driftreplay
