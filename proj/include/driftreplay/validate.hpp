#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftreplay/correlation.hpp"
#include "driftreplay/influence.hpp"
#include "driftreplay/rec_model.hpp"
#include "driftreplay/report.hpp"

namespace driftreplay {

namespace detail {
inline std::vector<InteractionRecord> random_interactions(std::mt19937& gen, std::size_t n,
                                                          std::size_t users, std::size_t items) {
  std::uniform_int_distribution<std::int64_t> du(0, static_cast<std::int64_t>(users) - 1);
  std::uniform_int_distribution<std::int64_t> di(0, static_cast<std::int64_t>(items) - 1);
  std::uniform_real_distribution<double> dr(1.0, 5.0);
  std::vector<InteractionRecord> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    out[t].user_id = du(gen);
    out[t].item_id = di(gen);
    out[t].rating = dr(gen);
    out[t].timestamp = static_cast<std::int64_t>(t);
  }
  return out;
}

inline ArchDescriptor random_small_arch(std::mt19937& gen) {
  ArchDescriptor arch;
  const Backbone bbs[] = {Backbone::WideDeep, Backbone::CrossNet, Backbone::BiInteractionFM};
  arch.backbone = bbs[gen() % 3];
  arch.num_users = 4 + gen() % 6;
  arch.num_items = 4 + gen() % 6;
  arch.embedding_dim = 2 + gen() % 3;
  arch.hidden = (gen() % 2 == 0) ? std::vector<std::size_t>{3} : std::vector<std::size_t>{4, 3};
  arch.cross_depth = 1 + gen() % 2;
  return arch;
}
}  // namespace detail

struct Eq5Report {
  std::size_t cases = 0;
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

/// Closed-form parameter delta versus the difference of the two simulated
/// updates, over random backbones, batch sizes 2-32 and alpha in
/// [1e-4, 1]. Relative error is measured between the full delta vectors.
inline Eq5Report validate_eq5(std::size_t cases, std::uint32_t seed) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> alpha_dist(1e-4, 1.0);
  Eq5Report report;
  report.cases = cases;
  for (std::size_t t = 0; t < cases; ++t) {
    ArchDescriptor arch = detail::random_small_arch(gen);
    auto [model, params] = build_model(arch, static_cast<std::uint32_t>(gen()));
    std::size_t batch_size = 2 + gen() % 31;
    auto batch = detail::random_interactions(gen, batch_size, arch.num_users, arch.num_items);
    std::size_t removed = gen() % batch_size;
    double alpha = alpha_dist(gen);
    const LossKind kind = LossKind::SquaredError;

    SparseGrad closed = param_delta_closed_form(model, params, batch, removed, alpha, kind);
    ParamSet cf = counterfactual_step(model, params, batch, removed, alpha,
                                      CounterfactualDivisor::Bminus1, kind);
    ParamSet full = mbgd_step(model, params, batch, alpha, kind);

    double num = 0.0, den = 0.0;
    ParamSet closed_dense;
    for (const auto& [name, m] : params.groups())
      closed_dense.add_group(name, Matrix(m.rows, m.cols, 0.0));
    closed.axpy_into(closed_dense, 1.0);
    for (const auto& [name, m] : closed_dense.groups()) {
      const Matrix& a = cf.at(name);
      const Matrix& b = full.at(name);
      for (std::size_t i = 0; i < m.data.size(); ++i) {
        double sim = a.data[i] - b.data[i];
        double d = m.data[i] - sim;
        num += d * d;
        den += m.data[i] * m.data[i];
      }
    }
    double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-30);
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

struct EstimatorReport {
  std::size_t quadratic_cases = 0;
  double max_quadratic_gap = 0.0;  // |oracle - estimate - analytic second order|, relative
  std::size_t sign_cases = 0;
  std::size_t sign_agreements = 0;
  double seconds = 0.0;

  double sign_agreement_rate() const {
    return sign_cases == 0 ? 0.0
                           : static_cast<double>(sign_agreements) / static_cast<double>(sign_cases);
  }
};

/// Estimator fidelity. Part one uses an all-zero CrossNet, where only the
/// output bias receives gradient, so the loss is exactly quadratic in the
/// one moving coordinate and the Taylor remainder is delta^2/2 with delta
/// from the closed form. Part two trains small models short of
/// convergence and checks the sign of estimate vs oracle.
inline EstimatorReport validate_estimator(std::size_t quadratic_cases, std::size_t sign_cases,
                                          std::uint32_t seed) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937 gen(seed);
  EstimatorReport report;
  report.quadratic_cases = quadratic_cases;
  report.sign_cases = sign_cases;
  const LossKind kind = LossKind::SquaredError;

  for (std::size_t t = 0; t < quadratic_cases; ++t) {
    ArchDescriptor arch;
    arch.backbone = Backbone::CrossNet;
    arch.num_users = 3;
    arch.num_items = 3;
    arch.embedding_dim = 2;
    arch.hidden = {3};
    RecModel model(arch);
    ParamSet zeros;
    for (const auto& spec : model.group_specs())
      zeros.add_group(spec.name, Matrix(spec.rows, spec.cols, 0.0));
    std::uniform_real_distribution<double> bias_dist(-2.0, 6.0);
    zeros.at("dense_last_b").data[0] = bias_dist(gen);

    std::size_t batch_size = 2 + gen() % 8;
    auto batch = detail::random_interactions(gen, batch_size, 3, 3);
    std::size_t removed = gen() % batch_size;
    std::uniform_real_distribution<double> alpha_dist(0.05, 0.8);
    double alpha = alpha_dist(gen);

    ParamSet theta_next = mbgd_step(model, zeros, batch, alpha, kind);
    double oracle = one_step_loss_change_oracle(model, batch, batch, removed, zeros, alpha,
                                                CounterfactualDivisor::Bminus1, kind);
    double estimate = one_step_loss_change_estimate(model, batch, batch, removed, zeros,
                                                    theta_next, alpha, kind,
                                                    ParamSelection::Full);
    SparseGrad delta = param_delta_closed_form(model, zeros, batch, removed, alpha, kind);
    double d = delta.slice({"dense_last_b", kWholeGroup})[0];
    double gap = std::abs(oracle - estimate - 0.5 * d * d);
    double rel = gap / std::max({1.0, std::abs(oracle), 0.5 * d * d});
    report.max_quadratic_gap = std::max(report.max_quadratic_gap, rel);
  }

  for (std::size_t t = 0; t < sign_cases; ++t) {
    ArchDescriptor arch = detail::random_small_arch(gen);
    auto [model, params] = build_model(arch, static_cast<std::uint32_t>(gen()));
    auto data = detail::random_interactions(gen, 60, arch.num_users, arch.num_items);

    TrainConfig tc;
    tc.learning_rate = 0.05;
    tc.batch_size = 16;
    tc.epochs = 4;
    tc.optimizer = OptimizerKind::MBGD;
    tc.seed = static_cast<std::uint32_t>(gen());
    TrainResult trained = train(model, params, data, tc, kind);

    std::size_t batch_size = 4 + gen() % 13;
    std::vector<InteractionRecord> batch(data.begin(),
                                         data.begin() + static_cast<std::ptrdiff_t>(batch_size));
    std::size_t removed = gen() % batch_size;
    const double alpha = 0.01;

    ParamSet theta_next = mbgd_step(model, trained.params, batch, alpha, kind);
    double oracle = one_step_loss_change_oracle(model, data, batch, removed, trained.params,
                                                alpha, CounterfactualDivisor::Bminus1, kind);
    double estimate = one_step_loss_change_estimate(model, data, batch, removed, trained.params,
                                                    theta_next, alpha, kind,
                                                    ParamSelection::Full);
    if (oracle * estimate > 0.0 || (std::abs(oracle) < 1e-15 && std::abs(estimate) < 1e-15))
      ++report.sign_agreements;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// sample_id,oracle,estimate,ggscore rows for a study's final epoch.
inline void write_influence_csv(const InfluenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "sample_id,oracle,estimate,ggscore\n";
  for (std::size_t i = 0; i < report.oracle.size(); ++i)
    out << i << "," << detail::format_double(report.oracle[i]) << ","
        << detail::format_double(report.estimate[i]) << ","
        << detail::format_double(report.ggscore[i]) << "\n";
}

inline nlohmann::json correlation_summary_json(const CorrelationStudyResult& result) {
  nlohmann::json j;
  j["epochs"] = result.onestep_by_epoch.size();
  j["samples"] = result.retrain.size();
  j["epoch_vs_retrain_pearson"] = result.epoch_vs_retrain;
  j["epoch_pairwise_pearson"] = result.epoch_pairwise;
  j["final_epoch_vs_retrain_pearson"] =
      result.epoch_vs_retrain.empty() ? 0.0 : result.epoch_vs_retrain.back();
  j["pearson_oracle_estimate"] = result.report.pearson_oracle_estimate;
  j["spearman_oracle_estimate"] = result.report.spearman_oracle_estimate;
  j["pearson_oracle_ggscore"] = result.report.pearson_oracle_ggscore;
  j["spearman_oracle_ggscore"] = result.report.spearman_oracle_ggscore;
  j["retrain_converged"] = result.retrain_converged;
  return j;
}

}  // namespace driftreplay
