#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftreplay/blocks.hpp"
#include "driftreplay/config.hpp"
#include "driftreplay/influence.hpp"
#include "driftreplay/metrics.hpp"
#include "driftreplay/rec_model.hpp"
#include "driftreplay/reservoir.hpp"
#include "driftreplay/strategies.hpp"
#include "driftreplay/synth.hpp"
#include "driftreplay/train.hpp"

namespace driftreplay {

/// (theta_hat_prime, theta_hat, V) as picked by a hyper-parameter scheme.
/// Epoch snapshots are 1-based in the scheme notation: theta_1..theta_E.
struct ResolvedScheme {
  std::size_t prime_index = 0;  // snapshot index of theta_hat_prime
  std::size_t hat_index = 0;    // snapshot index of theta_hat
  ReferenceVector v;
};

template <class Model>
ResolvedScheme scheme_resolve(SchemeKind scheme, const std::vector<ParamSet>& snapshots,
                              std::span<const InteractionRecord> reservoir,
                              const std::vector<InteractionRecord>* incoming, const Model& model,
                              LossKind kind, ParamSelection sel) {
  const std::size_t e = snapshots.size();
  auto need = [&](std::size_t n) {
    if (e < n)
      fail(ErrorKind::InvalidConfig, "scheme needs " + std::to_string(n) + " epoch snapshots, have " +
                                         std::to_string(e));
  };
  ResolvedScheme out;
  switch (scheme) {
    case SchemeKind::A:
      need(2);
      out.prime_index = e - 2;
      out.hat_index = e - 1;
      break;
    case SchemeKind::B:
      need(3);
      out.prime_index = e - 3;
      out.hat_index = e - 2;
      break;
    case SchemeKind::C:
      need(3);
      out.prime_index = e - 3;
      out.hat_index = e - 1;
      break;
    case SchemeKind::D:
      need(2);
      out.prime_index = e - 2;
      out.hat_index = e - 1;
      break;
  }
  if (scheme == SchemeKind::D) {
    if (incoming == nullptr || incoming->empty())
      fail(ErrorKind::SchemeUnavailable, "scheme D needs the incremental block");
    std::vector<InteractionRecord> merged(reservoir.begin(), reservoir.end());
    merged.insert(merged.end(), incoming->begin(), incoming->end());
    out.v = reference_vector(model, merged, snapshots[out.hat_index], kind, sel);
  } else {
    out.v = reference_vector(model, reservoir, snapshots[out.hat_index], kind, sel);
  }
  return out;
}

struct StageReport {
  std::size_t stage = 0;        // 1-based
  std::size_t train_block = 0;  // the incremental block merged this stage
  std::vector<std::size_t> eval_blocks;
  std::vector<double> rmse_per_block;
  std::vector<double> auc_per_block;  // NaN where a block is single-class
  double stage_rmse = std::numeric_limits<double>::quiet_NaN();
  double stage_auc = std::numeric_limits<double>::quiet_NaN();
  double train_seconds = 0.0;
  double sampling_seconds = 0.0;
  std::size_t train_size = 0;
  std::size_t reservoir_size = 0;
  std::int64_t max_train_timestamp = 0;
  std::int64_t min_eval_timestamp = 0;  // 0 when there is nothing to evaluate
};

struct SeedReport {
  std::uint32_t seed = 0;
  std::vector<StageReport> stages;
  double avg_rmse = std::numeric_limits<double>::quiet_NaN();  // stages 1-4
  double avg_auc = std::numeric_limits<double>::quiet_NaN();   // stages 1-4
};

struct RunReport {
  std::vector<SeedReport> per_seed;
  double avg_rmse_mean = std::numeric_limits<double>::quiet_NaN();
  double avg_rmse_std = std::numeric_limits<double>::quiet_NaN();
  double avg_auc_mean = std::numeric_limits<double>::quiet_NaN();
  double avg_auc_std = std::numeric_limits<double>::quiet_NaN();
};

/// Snapshot of one stage's scoring pass, for the `score` CLI surface.
struct StageScores {
  std::size_t stage = 0;
  std::vector<InteractionRecord> reservoir;
  std::vector<ScoreEntry> scores;
};
using ScoreHook = std::function<void(const StageScores&)>;

/// Loads or generates the corpus and applies the labeling rule. With a
/// logistic head, records the rule drops (e.g. rating 3) leave the corpus
/// entirely; with a squared-error head they stay for RMSE and are simply
/// excluded from AUC.
inline std::vector<InteractionRecord> load_protocol_records(const ProtocolConfig& cfg) {
  std::vector<InteractionRecord> records;
  switch (cfg.source) {
    case DataSource::Synth:
      records = synth_drift(cfg.synth, cfg.synth_seed);
      break;
    case DataSource::MovieLens:
      records = load_movielens(cfg.path).records;
      break;
    case DataSource::Csv:
      records = load_csv(cfg.path).records;
      break;
  }
  if (cfg.frequency_ratings) records = apply_frequency_ratings(std::move(records));
  label_records(records, cfg.binarize_rule);
  if (cfg.model.head == LossKind::Logistic) {
    std::vector<InteractionRecord> kept;
    kept.reserve(records.size());
    for (const auto& r : records)
      if (r.label != InteractionRecord::kNoLabel) kept.push_back(r);
    records = std::move(kept);
  }
  return records;
}

namespace detail {

inline double nan_mean(const std::vector<double>& xs) {
  double acc = 0.0;
  std::size_t n = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      acc += x;
      ++n;
    }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : acc / static_cast<double>(n);
}

struct StageEval {
  std::vector<std::size_t> blocks;
  std::vector<double> rmse;
  std::vector<double> auc;
};

inline StageEval evaluate_future_blocks(const RecModel& model, const ParamSet& params,
                                        const BlockSet& bs, std::size_t after_block,
                                        EvalMode mode, LossKind head) {
  StageEval out;
  std::size_t stop = mode == EvalMode::Next ? std::min(after_block + 2, bs.blocks.size())
                                            : bs.blocks.size();
  for (std::size_t b = after_block + 1; b < stop; ++b) {
    const auto& block = bs.blocks[b];
    std::vector<double> preds, targets, auc_scores;
    std::vector<int> labels;
    preds.reserve(block.size());
    for (const auto& r : block) {
      double p = model.forward(params, r);
      if (head == LossKind::SquaredError) {
        preds.push_back(p);
        targets.push_back(r.rating);
      } else {
        preds.push_back(sigmoid(p));
        targets.push_back(static_cast<double>(r.label));
      }
      if (r.label != InteractionRecord::kNoLabel) {
        auc_scores.push_back(p);
        labels.push_back(r.label);
      }
    }
    out.blocks.push_back(b);
    out.rmse.push_back(preds.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : rmse(preds, targets));
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l == 1 ? has_pos : has_neg) = true;
    out.auc.push_back(has_pos && has_neg ? auc(auc_scores, labels)
                                         : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace detail

/// One full 5-stage pass for a single seed. Blocks [0, reservoir_blocks)
/// seed the reservoir; each later block arrives as the stage's increment.
/// Replay strategies select from the reservoir with the previous stage's
/// model, merge the increment, retrain from scratch, then evaluate on all
/// strictly later blocks. stop_after_stage cuts the loop short once the
/// hook has seen that stage's scores.
inline SeedReport run_protocol_seed(const ProtocolConfig& cfg, const BlockSet& bs,
                                    const ArchDescriptor& arch, std::uint32_t seed,
                                    const ScoreHook* hook = nullptr,
                                    std::size_t stop_after_stage = static_cast<std::size_t>(-1)) {
  using clock = std::chrono::steady_clock;
  const RecModel model(arch);
  const LossKind head = arch.head;
  const std::size_t R = cfg.reservoir_blocks;
  const std::size_t stages = cfg.n_blocks - R;

  auto stage_train_cfg = [&](std::size_t stage) {
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(seed, 2 * stage + 1);
    return tc;
  };
  auto stage_init = [&](std::size_t stage) { return model.init_params(mix_seed(seed, 2 * stage)); };

  std::vector<InteractionRecord> reservoir;
  for (std::size_t b = 0; b < R; ++b)
    reservoir.insert(reservoir.end(), bs.blocks[b].begin(), bs.blocks[b].end());
  const std::size_t capacity = reservoir.size();

  const bool needs_base_model =
      cfg.strategy == StrategyKind::Megg || cfg.strategy == StrategyKind::ICarl ||
      cfg.strategy == StrategyKind::Mir || cfg.strategy == StrategyKind::FineTune;

  std::optional<TrainResult> prev;
  if (needs_base_model)
    prev = train(model, stage_init(0), reservoir, stage_train_cfg(0), head);

  SeedReport report;
  report.seed = seed;

  for (std::size_t s = 1; s <= stages; ++s) {
    const std::size_t b = R - 1 + s;
    const std::vector<InteractionRecord>& incoming = bs.blocks[b];

    StageReport stage;
    stage.stage = s;
    stage.train_block = b;

    // --- selection + reservoir update (replay strategies only) ---
    std::vector<InteractionRecord> train_data;
    auto sample_start = clock::now();
    switch (cfg.strategy) {
      case StrategyKind::FineTune:
        train_data = incoming;
        break;
      case StrategyKind::FullBatch: {
        for (std::size_t i = 0; i <= b; ++i)
          train_data.insert(train_data.end(), bs.blocks[i].begin(), bs.blocks[i].end());
        break;
      }
      default: {
        SelectionPlan plan = cfg.replay_ratio
                                 ? SelectionPlan::for_ratio(capacity, *cfg.replay_ratio)
                                 : SelectionPlan::for_capacity(capacity, incoming.size());
        std::vector<InteractionRecord> kept;
        switch (cfg.strategy) {
          case StrategyKind::Megg: {
            ResolvedScheme resolved =
                scheme_resolve(cfg.scheme, prev->snapshots, reservoir, &incoming, model, head,
                               cfg.selection);
            std::vector<ScoreEntry> scores =
                ggscore_batch(model, reservoir, prev->snapshots[resolved.prime_index], resolved.v,
                              head, cfg.selection);
            if (hook) (*hook)({s, reservoir, scores});
            kept = megg_select_scored(reservoir, scores, plan.keep);
            break;
          }
          case StrategyKind::GDumb: {
            std::mt19937 rng(mix_seed(seed, 0xd0d0 + s));
            kept = gdumb_select(reservoir, plan.keep, rng);
            break;
          }
          case StrategyKind::ICarl:
            kept = icarl_select(reservoir, plan.keep, model, prev->params);
            break;
          case StrategyKind::Mir:
            kept = mir_select(reservoir, plan.keep, model, prev->params, incoming,
                              cfg.train.learning_rate, head);
            break;
          default:
            break;
        }
        Reservoir updated = reservoir_update(kept, incoming, capacity);
        reservoir = updated.records();
        train_data = reservoir;
        break;
      }
    }
    stage.sampling_seconds = std::chrono::duration<double>(clock::now() - sample_start).count();
    stage.reservoir_size = reservoir.size();
    if (reservoir.size() > capacity)
      fail(ErrorKind::CapacityExceeded, "stage " + std::to_string(s));

    if (stop_after_stage != static_cast<std::size_t>(-1) && s == stop_after_stage && hook) {
      report.stages.push_back(std::move(stage));
      return report;
    }

    // --- training ---
    auto train_start = clock::now();
    TrainResult current;
    if (cfg.strategy == StrategyKind::FineTune) {
      current = train(model, prev->params, train_data, stage_train_cfg(s), head);
    } else {
      current = train(model, stage_init(s), train_data, stage_train_cfg(s), head);
    }
    stage.train_seconds = std::chrono::duration<double>(clock::now() - train_start).count();
    stage.train_size = train_data.size();

    // --- evaluation on strictly later blocks ---
    detail::StageEval eval =
        detail::evaluate_future_blocks(model, current.params, bs, b, cfg.eval, head);
    stage.eval_blocks = eval.blocks;
    stage.rmse_per_block = eval.rmse;
    stage.auc_per_block = eval.auc;
    stage.stage_rmse = detail::nan_mean(eval.rmse);
    stage.stage_auc = detail::nan_mean(eval.auc);

    std::int64_t max_train_ts = std::numeric_limits<std::int64_t>::min();
    for (const auto& r : train_data) max_train_ts = std::max(max_train_ts, r.timestamp);
    stage.max_train_timestamp = max_train_ts;
    if (!eval.blocks.empty()) {
      std::int64_t min_eval_ts = std::numeric_limits<std::int64_t>::max();
      for (std::size_t eb : eval.blocks)
        min_eval_ts = std::min(min_eval_ts, bs.first_timestamp(eb));
      stage.min_eval_timestamp = min_eval_ts;
    }

    prev = std::move(current);
    report.stages.push_back(std::move(stage));
    if (s == stop_after_stage) break;
  }

  // averages over stages 1..4 only
  std::vector<double> rmses, aucs;
  for (const StageReport& st : report.stages)
    if (st.stage >= 1 && st.stage <= 4) {
      rmses.push_back(st.stage_rmse);
      aucs.push_back(st.stage_auc);
    }
  if (!rmses.empty()) report.avg_rmse = detail::nan_mean(rmses);
  if (!aucs.empty()) report.avg_auc = detail::nan_mean(aucs);
  return report;
}

/// Architecture with the user/item populations filled in from the corpus.
inline ArchDescriptor resolve_arch(const ProtocolConfig& cfg,
                                   std::span<const InteractionRecord> records) {
  ArchDescriptor arch = cfg.model;
  if (arch.num_users == 0 || arch.num_items == 0) {
    std::int64_t max_u = -1, max_i = -1;
    for (const auto& r : records) {
      max_u = std::max(max_u, r.user_id);
      max_i = std::max(max_i, r.item_id);
    }
    if (arch.num_users == 0) arch.num_users = static_cast<std::size_t>(max_u + 1);
    if (arch.num_items == 0) arch.num_items = static_cast<std::size_t>(max_i + 1);
  }
  return arch;
}

/// The full benchmark: every seed through every stage, with the across-
/// seed mean and standard deviation of the stage-1..4 averages.
inline RunReport run_protocol(const ProtocolConfig& cfg) {
  validate(cfg);
  std::vector<InteractionRecord> records = load_protocol_records(cfg);
  BlockSet bs = split_blocks(std::move(records), cfg.n_blocks);
  ArchDescriptor arch;
  {
    std::vector<InteractionRecord> flat;
    for (const auto& b : bs.blocks) flat.insert(flat.end(), b.begin(), b.end());
    arch = resolve_arch(cfg, flat);
  }

  RunReport report;
  std::vector<double> rmses, aucs;
  for (std::uint32_t seed : cfg.seeds) {
    SeedReport sr = run_protocol_seed(cfg, bs, arch, seed);
    rmses.push_back(sr.avg_rmse);
    aucs.push_back(sr.avg_auc);
    report.per_seed.push_back(std::move(sr));
  }
  auto finite = [](const std::vector<double>& xs) {
    std::vector<double> out;
    for (double x : xs)
      if (!std::isnan(x)) out.push_back(x);
    return out;
  };
  std::vector<double> r = finite(rmses), a = finite(aucs);
  if (!r.empty()) {
    report.avg_rmse_mean = mean(r);
    report.avg_rmse_std = stddev(r);
  }
  if (!a.empty()) {
    report.avg_auc_mean = mean(a);
    report.avg_auc_std = stddev(a);
  }
  return report;
}

}  // namespace driftreplay
