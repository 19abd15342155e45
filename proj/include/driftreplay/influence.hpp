#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftreplay/loss.hpp"
#include "driftreplay/parallel.hpp"
#include "driftreplay/param_set.hpp"
#include "driftreplay/record.hpp"
#include "driftreplay/sparse_grad.hpp"
#include "driftreplay/train.hpp"

namespace driftreplay {

/// Divisor of the counterfactual update. Bminus1 is the plain removal
/// step; B keeps the original batch divisor, which drops the batch-mean
/// interaction term from the linearized loss change.
enum class CounterfactualDivisor { Bminus1, B };

using ReferenceVector = SparseGrad;

namespace detail {
template <class Model>
std::vector<SparseGrad> per_sample_grads(const Model& model, const ParamSet& params,
                                         std::span<const InteractionRecord> batch,
                                         LossKind kind) {
  std::vector<SparseGrad> grads;
  grads.reserve(batch.size());
  for (const InteractionRecord& rec : batch)
    grads.push_back(model.per_sample_grad(params, rec, kind, ParamSelection::Full));
  return grads;
}
}  // namespace detail

/// One mini-batch gradient descent step: theta - (alpha/B) sum g(z, theta).
template <class Model>
ParamSet mbgd_step(const Model& model, ParamSet params,
                   std::span<const InteractionRecord> batch, double alpha, LossKind kind) {
  if (batch.empty()) fail(ErrorKind::EmptyBatch, "mbgd_step over empty batch");
  SparseGrad sum;
  for (const InteractionRecord& rec : batch)
    sum.add(model.per_sample_grad(params, rec, kind, ParamSelection::Full));
  sum.axpy_into(params, -alpha / static_cast<double>(batch.size()));
  return params;
}

/// The same step with one sample removed from the batch:
/// theta - (alpha/divisor) sum_{z != z_k} g(z, theta).
template <class Model>
ParamSet counterfactual_step(const Model& model, ParamSet params,
                             std::span<const InteractionRecord> batch, std::size_t removed_index,
                             double alpha, CounterfactualDivisor divisor, LossKind kind) {
  if (batch.size() < 2) fail(ErrorKind::EmptyBatch, "counterfactual batch needs >= 2 records");
  if (removed_index >= batch.size())
    fail(ErrorKind::NotInBatch, "removed index " + std::to_string(removed_index));
  SparseGrad sum;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i == removed_index) continue;
    sum.add(model.per_sample_grad(params, batch[i], kind, ParamSelection::Full));
  }
  double div = divisor == CounterfactualDivisor::Bminus1
                   ? static_cast<double>(batch.size() - 1)
                   : static_cast<double>(batch.size());
  sum.axpy_into(params, -alpha / div);
  return params;
}

/// Record-identity overload; removes the first occurrence.
template <class Model>
ParamSet counterfactual_step(const Model& model, ParamSet params,
                             std::span<const InteractionRecord> batch,
                             const InteractionRecord& removed, double alpha,
                             CounterfactualDivisor divisor, LossKind kind) {
  auto it = std::find(batch.begin(), batch.end(), removed);
  if (it == batch.end()) fail(ErrorKind::NotInBatch, "removed record not in batch");
  return counterfactual_step(model, std::move(params), batch,
                             static_cast<std::size_t>(it - batch.begin()), alpha, divisor, kind);
}

/// Closed form of counterfactual_step(Bminus1) - mbgd_step:
/// (alpha/(B-1)) * (g(z_k, theta) - g(Z, theta)).
template <class Model>
SparseGrad param_delta_closed_form(const Model& model, const ParamSet& params,
                                   std::span<const InteractionRecord> batch,
                                   std::size_t removed_index, double alpha, LossKind kind) {
  if (batch.size() < 2) fail(ErrorKind::EmptyBatch, "closed-form delta needs >= 2 records");
  if (removed_index >= batch.size())
    fail(ErrorKind::NotInBatch, "removed index " + std::to_string(removed_index));
  SparseGrad mean;
  SparseGrad removed_grad;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    SparseGrad g = model.per_sample_grad(params, batch[i], kind, ParamSelection::Full);
    if (i == removed_index) removed_grad = g;
    mean.add(g);
  }
  mean.scale(1.0 / static_cast<double>(batch.size()));
  SparseGrad delta = sub(removed_grad, mean);
  delta.scale(alpha / static_cast<double>(batch.size() - 1));
  return delta;
}

/// Exact one-step loss change: evaluates the full-dataset mean loss under
/// both updated parameter sets. No approximation.
template <class Model>
double one_step_loss_change_oracle(const Model& model,
                                   std::span<const InteractionRecord> train_set,
                                   std::span<const InteractionRecord> batch,
                                   std::size_t removed_index, const ParamSet& theta,
                                   double alpha, CounterfactualDivisor divisor, LossKind kind) {
  if (train_set.empty()) fail(ErrorKind::EmptyDataset, "oracle needs a non-empty train set");
  ParamSet theta_next = mbgd_step(model, theta, batch, alpha, kind);
  ParamSet theta_removed = counterfactual_step(model, theta, batch, removed_index, alpha, divisor, kind);
  return dataset_loss(model, theta_removed, train_set, kind) -
         dataset_loss(model, theta_next, train_set, kind);
}

/// First-order estimate of the one-step loss change, given the reference
/// gradient V = g(train_set, theta_next) precomputed by the caller.
template <class Model>
double one_step_loss_change_estimate_given_v(
    const Model& model, const ReferenceVector& v, std::span<const InteractionRecord> batch,
    std::size_t removed_index, const ParamSet& theta, double alpha,
    CounterfactualDivisor divisor, LossKind kind, ParamSelection sel) {
  if (batch.size() < 2) fail(ErrorKind::EmptyBatch, "estimate needs >= 2 records");
  if (removed_index >= batch.size())
    fail(ErrorKind::NotInBatch, "removed index " + std::to_string(removed_index));
  SparseGrad gk = model.per_sample_grad(theta, batch[removed_index], kind, sel);
  if (divisor == CounterfactualDivisor::B)
    return alpha / static_cast<double>(batch.size()) * v.dot(gk);
  SparseGrad mean = batch_grad(model, theta, batch, kind, sel);
  SparseGrad diff = sub(gk, mean);
  return alpha / static_cast<double>(batch.size() - 1) * v.dot(diff);
}

/// Canonical form: computes V = g(train_set, theta_next) itself.
template <class Model>
double one_step_loss_change_estimate(const Model& model,
                                     std::span<const InteractionRecord> train_set,
                                     std::span<const InteractionRecord> batch,
                                     std::size_t removed_index, const ParamSet& theta,
                                     const ParamSet& theta_next, double alpha, LossKind kind,
                                     ParamSelection sel,
                                     CounterfactualDivisor divisor = CounterfactualDivisor::Bminus1) {
  if (train_set.empty()) fail(ErrorKind::EmptyDataset, "estimate needs a non-empty train set");
  ReferenceVector v = batch_grad(model, theta_next, train_set, kind, sel);
  return one_step_loss_change_estimate_given_v(model, v, batch, removed_index, theta, alpha,
                                               divisor, kind, sel);
}

/// V = grad of the mean dataset loss at theta_hat, on the chosen support.
template <class Model>
ReferenceVector reference_vector(const Model& model, std::span<const InteractionRecord> data,
                                 const ParamSet& theta_hat, LossKind kind, ParamSelection sel) {
  if (data.empty()) fail(ErrorKind::EmptyDataset, "reference_vector over empty dataset");
  return batch_grad(model, theta_hat, data, kind, sel);
}

/// GG(z, theta | V) = V . grad L(z, theta) over the support.
template <class Model>
double ggscore(const Model& model, const InteractionRecord& z, const ParamSet& theta,
               const ReferenceVector& v, LossKind kind, ParamSelection sel) {
  return v.dot(model.per_sample_grad(theta, z, kind, sel));
}

struct ScoreEntry {
  std::size_t index = 0;
  double score = 0.0;
};

/// Scores every record against (theta, V), in input order. Read-only over
/// shared state; parallelized under the DRIFT_REPLAY_THREADS budget.
template <class Model>
std::vector<ScoreEntry> ggscore_batch(const Model& model,
                                      std::span<const InteractionRecord> data,
                                      const ParamSet& theta_hat_prime, const ReferenceVector& v,
                                      LossKind kind, ParamSelection sel) {
  std::vector<ScoreEntry> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    try {
      out[i] = {i, ggscore(model, data[i], theta_hat_prime, v, kind, sel)};
    } catch (const Error& e) {
      throw Error(e.kind(), "sample " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

struct RetrainResult {
  double loss_change = 0.0;
  bool converged = true;            // final-epoch loss decrease <= tolerance on both runs
  double base_final_decrease = 0.0;
  double counterfactual_final_decrease = 0.0;

  static constexpr double kConvergenceTol = 1e-3;
};

/// Definition-level loss change: retrains from the same initialization on
/// D and on D minus one record, then differences the full-D train loss.
/// O(train) per call; meant for tiny instances.
template <class Model>
RetrainResult loss_change_retrain_oracle(const Model& model, const ParamSet& init,
                                         std::span<const InteractionRecord> data,
                                         std::size_t removed_index, const TrainConfig& cfg,
                                         LossKind kind) {
  if (data.size() < 2)
    fail(ErrorKind::EmptyDataset, "retrain oracle needs >= 2 records to remove one");
  if (removed_index >= data.size())
    fail(ErrorKind::NotInBatch, "removed index " + std::to_string(removed_index));

  TrainResult full = train(model, init, data, cfg, kind);

  std::vector<InteractionRecord> reduced;
  reduced.reserve(data.size() - 1);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i != removed_index) reduced.push_back(data[i]);
  TrainResult counter = train(model, init, reduced, cfg, kind);

  auto final_decrease = [](const TrainResult& r) {
    std::size_t n = r.epoch_loss.size();
    return n < 2 ? 0.0 : std::abs(r.epoch_loss[n - 2] - r.epoch_loss[n - 1]);
  };

  RetrainResult out;
  out.loss_change = dataset_loss(model, counter.params, data, kind) -
                    dataset_loss(model, full.params, data, kind);
  out.base_final_decrease = final_decrease(full);
  out.counterfactual_final_decrease = final_decrease(counter);
  out.converged = out.base_final_decrease <= RetrainResult::kConvergenceTol &&
                  out.counterfactual_final_decrease <= RetrainResult::kConvergenceTol;
  return out;
}

}  // namespace driftreplay
