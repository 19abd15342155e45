#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "driftreplay/init.hpp"
#include "driftreplay/loss.hpp"
#include "driftreplay/optim.hpp"
#include "driftreplay/param_set.hpp"
#include "driftreplay/record.hpp"
#include "driftreplay/sparse_grad.hpp"

namespace driftreplay {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 1024;
  std::size_t epochs = 5;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint32_t seed = 1;
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::InvalidConfig, "learning_rate must be > 0");
  if (cfg.batch_size < 2) fail(ErrorKind::InvalidConfig, "batch_size must be >= 2");
  if (cfg.epochs < 2) fail(ErrorKind::InvalidConfig, "epochs must be >= 2");
}

/// Mean of per-record gradients over the batch; support is the union of
/// the per-record supports.
template <class Model>
SparseGrad batch_grad(const Model& model, const ParamSet& params,
                      std::span<const InteractionRecord> batch, LossKind kind,
                      ParamSelection sel = ParamSelection::Full) {
  if (batch.empty()) fail(ErrorKind::EmptyBatch, "batch_grad over empty batch");
  SparseGrad acc;
  for (const InteractionRecord& rec : batch)
    acc.add(model.per_sample_grad(params, rec, kind, sel));
  acc.scale(1.0 / static_cast<double>(batch.size()));
  return acc;
}

/// Mean per-sample loss over the dataset (Definition-style 1/n scaling).
template <class Model>
double dataset_loss(const Model& model, const ParamSet& params,
                    std::span<const InteractionRecord> data, LossKind kind) {
  if (data.empty()) fail(ErrorKind::EmptyDataset, "dataset_loss over empty dataset");
  double acc = 0.0;
  for (const InteractionRecord& rec : data)
    acc += loss_value(model.forward(params, rec), rec.target(kind), kind);
  return acc / static_cast<double>(data.size());
}

struct TrainResult {
  ParamSet params;                  // same as snapshots.back()
  std::vector<ParamSet> snapshots;  // post-epoch parameters, one per epoch
  std::vector<double> epoch_loss;   // mean train loss after each epoch
};

/// Parameter snapshots a selection scheme draws from: the converged
/// parameters, the pre-convergence parameters, and the full epoch trail.
struct TrainingSnapshots {
  ParamSet theta_hat;        // after the final epoch
  ParamSet theta_hat_prime;  // after the penultimate epoch by default
  std::vector<ParamSet> per_epoch;

  static TrainingSnapshots from(const TrainResult& r) {
    if (r.snapshots.size() < 2)
      fail(ErrorKind::InvalidConfig, "need at least two epoch snapshots");
    TrainingSnapshots s;
    s.theta_hat = r.snapshots.back();
    s.theta_hat_prime = r.snapshots[r.snapshots.size() - 2];
    s.per_epoch = r.snapshots;
    return s;
  }
};

/// Mini-batch training with per-epoch reshuffling and post-epoch
/// snapshots. The shuffle stream derives from (seed, epoch), so a run is
/// bit-reproducible for a fixed config; the short final batch is kept.
template <class Model>
TrainResult train(const Model& model, ParamSet params,
                  std::span<const InteractionRecord> data, const TrainConfig& cfg,
                  LossKind kind) {
  validate(cfg);
  if (data.empty()) fail(ErrorKind::EmptyDataset, "train over empty dataset");

  TrainResult result;
  AdamState adam;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<InteractionRecord> batch;
  batch.reserve(std::min(cfg.batch_size, data.size()));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937 shuffle_gen(mix_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_gen);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(start + cfg.batch_size, order.size());
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      SparseGrad grad = batch_grad(model, params, std::span<const InteractionRecord>(batch), kind);
      if (cfg.optimizer == OptimizerKind::MBGD) {
        params = apply_mbgd(std::move(params), grad, cfg.learning_rate);
      } else {
        auto [next, state] = apply_adam(std::move(params), grad, cfg.learning_rate, std::move(adam));
        params = std::move(next);
        adam = std::move(state);
      }
    }
    result.snapshots.push_back(params);
    result.epoch_loss.push_back(dataset_loss(model, params, data, kind));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace driftreplay
