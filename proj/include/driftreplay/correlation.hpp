#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "driftreplay/influence.hpp"
#include "driftreplay/init.hpp"
#include "driftreplay/mlp.hpp"
#include "driftreplay/stats.hpp"
#include "driftreplay/train.hpp"

namespace driftreplay {

/// MLP over a fixed feature table; record.user_id indexes the feature row.
/// This is the study vehicle for validating the one-step machinery on a
/// plain classification task rather than an id-embedding model.
class FeatureMlp {
 public:
  FeatureMlp(std::shared_ptr<const Matrix> features, std::vector<std::size_t> hidden)
      : features_(std::move(features)), hidden_(std::move(hidden)) {
    if (!features_ || features_->rows == 0 || features_->cols == 0)
      fail(ErrorKind::InvalidArch, "feature table must be non-empty");
  }

  std::size_t input_dim() const { return features_->cols; }
  std::size_t sample_count() const { return features_->rows; }

  std::vector<GroupSpec> group_specs() const {
    std::vector<GroupSpec> specs;
    std::size_t in = input_dim();
    for (std::size_t k = 0; k < hidden_.size(); ++k) {
      specs.push_back({detail::dense_name(k, 'W'), hidden_[k], in, GroupKind::Dense});
      specs.push_back({detail::dense_name(k, 'b'), hidden_[k], 1, GroupKind::Dense});
      in = hidden_[k];
    }
    specs.push_back({"dense_last_W", 1, in, GroupKind::Dense});
    specs.push_back({"dense_last_b", 1, 1, GroupKind::Dense});
    return specs;
  }

  ParamSet init_params(std::uint32_t seed) const {
    std::mt19937 gen(seed);
    ParamSet params;
    for (const GroupSpec& spec : group_specs()) {
      Matrix m(spec.rows, spec.cols, 0.0);
      if (!spec.name.ends_with("_b")) init_uniform(m, gen, spec.cols);
      params.add_group(spec.name, std::move(m));
    }
    return params;
  }

  double forward(const ParamSet& params, const InteractionRecord& rec) const {
    std::vector<std::vector<double>> acts;
    detail::mlp_hidden_forward(params, hidden_, feature_row(rec), acts);
    return detail::dense_last_forward(params, acts.back());
  }

  SparseGrad per_sample_grad(const ParamSet& params, const InteractionRecord& rec,
                             LossKind kind, ParamSelection sel) const {
    std::vector<std::vector<double>> acts;
    detail::mlp_hidden_forward(params, hidden_, feature_row(rec), acts);
    double pred = detail::dense_last_forward(params, acts.back());
    double gscale = loss_grad(pred, rec.target(kind), kind);
    SparseGrad grad;
    std::vector<double> d_feat = detail::dense_last_backward(params, acts.back(), gscale, grad);
    detail::mlp_hidden_backward(params, hidden_, acts, std::move(d_feat),
                                sel == ParamSelection::Full, grad);
    return grad;
  }

 private:
  std::vector<double> feature_row(const InteractionRecord& rec) const {
    if (rec.user_id < 0 || static_cast<std::size_t>(rec.user_id) >= features_->rows)
      fail(ErrorKind::IdOutOfRange, "feature row " + std::to_string(rec.user_id));
    auto row = features_->row(static_cast<std::size_t>(rec.user_id));
    return {row.begin(), row.end()};
  }

  std::shared_ptr<const Matrix> features_;
  std::vector<std::size_t> hidden_;
};

/// One-step loss changes of every sample at fixed parameters, with the
/// whole dataset as the batch. Per-sample gradients are computed once and
/// re-summed in index order, so each entry matches the literal oracle
/// bit for bit at a fraction of the cost.
template <class Model>
std::vector<double> one_step_changes_all(const Model& model,
                                         std::span<const InteractionRecord> data,
                                         const ParamSet& theta, double alpha,
                                         CounterfactualDivisor divisor, LossKind kind) {
  const std::size_t n = data.size();
  if (n < 2) fail(ErrorKind::EmptyDataset, "need >= 2 records");
  std::vector<SparseGrad> grads = detail::per_sample_grads(model, theta, data, kind);

  SparseGrad sum;
  for (const SparseGrad& g : grads) sum.add(g);
  ParamSet theta_next = theta;
  sum.axpy_into(theta_next, -alpha / static_cast<double>(n));
  const double base = dataset_loss(model, theta_next, data, kind);

  const double div = divisor == CounterfactualDivisor::Bminus1 ? static_cast<double>(n - 1)
                                                               : static_cast<double>(n);
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t k) {
    SparseGrad partial;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      partial.add(grads[i]);
    }
    ParamSet theta_k = theta;
    partial.axpy_into(theta_k, -alpha / div);
    out[k] = dataset_loss(model, theta_k, data, kind) - base;
  });
  return out;
}

/// Per-sample influence triple at one training point plus their
/// rank agreement statistics.
struct InfluenceReport {
  std::vector<double> oracle;    // exact one-step loss change
  std::vector<double> estimate;  // first-order estimate
  std::vector<double> ggscore;   // GG(z, theta_hat_prime | g(D, theta_hat))
  double pearson_oracle_estimate = 0.0;
  double spearman_oracle_estimate = 0.0;
  double pearson_oracle_ggscore = 0.0;
  double spearman_oracle_ggscore = 0.0;
};

struct CorrelationConfig {
  std::size_t num_samples = 200;
  std::size_t input_dim = 5;
  std::size_t hidden_units = 8;
  double class_separation = 2.0;
  double learning_rate = 0.05;
  std::size_t batch_size = 20;
  std::size_t epochs = 10;
  std::uint32_t seed = 1;
  CounterfactualDivisor divisor = CounterfactualDivisor::Bminus1;
  // retrain cost guard: the study performs |D| retrainings of |D| records
  // over `epochs` epochs
  std::size_t max_retrain_record_steps = 50'000'000;
};

struct CorrelationStudyResult {
  std::vector<std::vector<double>> onestep_by_epoch;  // epochs x samples
  std::vector<double> retrain;                        // retraining loss change per sample
  std::vector<std::vector<double>> epoch_pairwise;    // Pearson among epoch vectors
  std::vector<double> epoch_vs_retrain;               // Pearson, each epoch vs retrain
  InfluenceReport report;                             // taken at the final epoch
  bool retrain_converged = true;
};

/// Synthetic two-class blobs: balanced labels, Gaussian features offset
/// along the first axis by +/- separation/2.
inline std::pair<std::shared_ptr<Matrix>, std::vector<InteractionRecord>> make_two_class_blobs(
    std::size_t n, std::size_t dim, double separation, std::uint32_t seed) {
  auto features = std::make_shared<Matrix>(n, dim, 0.0);
  std::vector<InteractionRecord> records(n);
  std::mt19937 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    int label = i < n / 2 ? 0 : 1;  // balanced; order is irrelevant to training
    if (n % 2 == 1 && i == n - 1) label = coin(gen) ? 1 : 0;
    for (std::size_t c = 0; c < dim; ++c) (*features)(i, c) = noise(gen);
    (*features)(i, 0) += (label == 1 ? 0.5 : -0.5) * separation;
    records[i].user_id = static_cast<std::int64_t>(i);
    records[i].item_id = 0;
    records[i].label = label;
    records[i].rating = label;
    records[i].timestamp = static_cast<std::int64_t>(i);
  }
  return {features, std::move(records)};
}

/// Replication study: tracks how well the one-step loss change at each
/// epoch end agrees with the retraining loss change, on a synthetic
/// two-class task with a two-layer network.
inline CorrelationStudyResult correlation_study(const CorrelationConfig& cfg) {
  const std::size_t n = cfg.num_samples;
  if (n < 4) fail(ErrorKind::InvalidConfig, "study needs at least 4 samples");
  std::size_t retrain_steps = n * cfg.epochs * n;
  if (retrain_steps > cfg.max_retrain_record_steps)
    fail(ErrorKind::InvalidConfig, "study too large: " + std::to_string(retrain_steps) +
                                       " retrain record-steps exceed the guard");

  auto [features, records] = make_two_class_blobs(n, cfg.input_dim, cfg.class_separation, cfg.seed);
  FeatureMlp model(features, {cfg.hidden_units});
  ParamSet init = model.init_params(cfg.seed + 1);

  TrainConfig tc;
  tc.learning_rate = cfg.learning_rate;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.optimizer = OptimizerKind::MBGD;
  tc.seed = cfg.seed + 2;

  const LossKind kind = LossKind::Logistic;
  TrainResult main_run = train(model, init, records, tc, kind);

  CorrelationStudyResult result;
  for (const ParamSet& snapshot : main_run.snapshots)
    result.onestep_by_epoch.push_back(
        one_step_changes_all(model, records, snapshot, cfg.learning_rate, cfg.divisor, kind));

  // Retraining loss change per sample. The full-data branch is shared.
  const double full_loss = dataset_loss(model, main_run.params, records, kind);
  result.retrain.resize(n);
  std::vector<char> converged(n, 1);
  parallel_for(n, [&](std::size_t k) {
    std::vector<InteractionRecord> reduced;
    reduced.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      if (i != k) reduced.push_back(records[i]);
    TrainResult counter = train(model, init, reduced, tc, kind);
    result.retrain[k] = dataset_loss(model, counter.params, records, kind) - full_loss;
    std::size_t e = counter.epoch_loss.size();
    double dec = e < 2 ? 0.0 : std::abs(counter.epoch_loss[e - 2] - counter.epoch_loss[e - 1]);
    converged[k] = dec <= RetrainResult::kConvergenceTol ? 1 : 0;
  });
  {
    std::size_t e = main_run.epoch_loss.size();
    double dec = e < 2 ? 0.0 : std::abs(main_run.epoch_loss[e - 2] - main_run.epoch_loss[e - 1]);
    if (dec > RetrainResult::kConvergenceTol) result.retrain_converged = false;
  }
  for (char c : converged)
    if (c == 0) result.retrain_converged = false;

  // Correlation matrices.
  const std::size_t E = result.onestep_by_epoch.size();
  result.epoch_pairwise.assign(E, std::vector<double>(E, 1.0));
  for (std::size_t a = 0; a < E; ++a)
    for (std::size_t b = 0; b < E; ++b)
      result.epoch_pairwise[a][b] = pearson(result.onestep_by_epoch[a], result.onestep_by_epoch[b]);
  result.epoch_vs_retrain.resize(E);
  for (std::size_t e = 0; e < E; ++e)
    result.epoch_vs_retrain[e] = pearson(result.onestep_by_epoch[e], result.retrain);

  // Influence triple at the final epoch.
  const ParamSet& theta_final = main_run.snapshots.back();
  ParamSet theta_next = mbgd_step(model, theta_final, records, cfg.learning_rate, kind);
  ReferenceVector v_next = batch_grad(model, theta_next, records, kind, ParamSelection::Full);
  result.report.oracle = result.onestep_by_epoch.back();
  result.report.estimate.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    result.report.estimate[k] = one_step_loss_change_estimate_given_v(
        model, v_next, records, k, theta_final, cfg.learning_rate, cfg.divisor, kind,
        ParamSelection::Full);

  const ParamSet& theta_hat = main_run.snapshots.back();
  const ParamSet& theta_hat_prime = main_run.snapshots[main_run.snapshots.size() - 2];
  ReferenceVector v_hat = reference_vector(model, records, theta_hat, kind, ParamSelection::Full);
  std::vector<ScoreEntry> scores =
      ggscore_batch(model, records, theta_hat_prime, v_hat, kind, ParamSelection::Full);
  result.report.ggscore.resize(n);
  for (const ScoreEntry& s : scores) result.report.ggscore[s.index] = s.score;

  result.report.pearson_oracle_estimate = pearson(result.report.oracle, result.report.estimate);
  result.report.spearman_oracle_estimate = spearman(result.report.oracle, result.report.estimate);
  result.report.pearson_oracle_ggscore = pearson(result.report.oracle, result.report.ggscore);
  result.report.spearman_oracle_ggscore = spearman(result.report.oracle, result.report.ggscore);
  return result;
}

}  // namespace driftreplay
