#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "driftreplay/error.hpp"
#include "driftreplay/protocol.hpp"
#include "driftreplay/stats.hpp"

namespace driftreplay {

namespace detail {
/// Round-trip-exact decimal form, so re-emitting a report is
/// byte-identical.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace detail

/// stages.csv: one `seed,stage,block,metric,value` row per evaluated
/// block metric. An empty report still emits the header.
inline void write_stage_csv(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "seed,stage,block,metric,value\n";
  for (const SeedReport& sr : report.per_seed)
    for (const StageReport& st : sr.stages)
      for (std::size_t i = 0; i < st.eval_blocks.size(); ++i) {
        out << sr.seed << "," << st.stage << "," << st.eval_blocks[i] << ",rmse,"
            << detail::format_double(st.rmse_per_block[i]) << "\n";
        out << sr.seed << "," << st.stage << "," << st.eval_blocks[i] << ",auc,"
            << detail::format_double(st.auc_per_block[i]) << "\n";
      }
}

inline nlohmann::json summary_json(const RunReport& report) {
  nlohmann::json j;
  j["avg_rmse_mean"] = report.avg_rmse_mean;
  j["avg_rmse_std"] = report.avg_rmse_std;
  j["avg_auc_mean"] = report.avg_auc_mean;
  j["avg_auc_std"] = report.avg_auc_std;
  j["seeds"] = nlohmann::json::array();
  for (const SeedReport& sr : report.per_seed) {
    nlohmann::json js;
    js["seed"] = sr.seed;
    js["avg_rmse"] = sr.avg_rmse;
    js["avg_auc"] = sr.avg_auc;
    js["stages"] = nlohmann::json::array();
    for (const StageReport& st : sr.stages) {
      nlohmann::json jst;
      jst["stage"] = st.stage;
      jst["train_block"] = st.train_block;
      jst["stage_rmse"] = st.stage_rmse;
      jst["stage_auc"] = st.stage_auc;
      jst["train_seconds"] = st.train_seconds;
      jst["sampling_seconds"] = st.sampling_seconds;
      jst["train_size"] = st.train_size;
      jst["reservoir_size"] = st.reservoir_size;
      jst["max_train_timestamp"] = st.max_train_timestamp;
      jst["min_eval_timestamp"] = st.min_eval_timestamp;
      js["stages"].push_back(jst);
    }
    j["seeds"].push_back(js);
  }
  return j;
}

/// Writes stages.csv and summary.json under out_dir. Same report, same
/// bytes.
inline void emit_report(const RunReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_stage_csv(report, out_dir + "/stages.csv");
  std::ofstream out(out_dir + "/summary.json");
  if (!out) fail(ErrorKind::IoError, "cannot write " + out_dir + "/summary.json");
  out << summary_json(report).dump(2) << "\n";
}

/// Re-aggregates a stages.csv written by emit_report: per-seed stage
/// metrics (mean over blocks), the stage-1..4 average, and across-seed
/// mean/std. The `report` subcommand uses this to merge finished runs.
inline nlohmann::json aggregate_stage_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "seed,stage,block,metric,value")
    fail(ErrorKind::HeaderMismatch, csv_path + ": expected seed,stage,block,metric,value");

  // (seed, stage, metric) -> values across blocks
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::string>, std::vector<double>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    auto fields = detail::split(view, ",");
    if (fields.size() != 5)
      fail(ErrorKind::MalformedInput, csv_path + ":" + std::to_string(line_no));
    std::int64_t seed, stage;
    double value;
    if (!detail::parse_int(fields[0], seed) || !detail::parse_int(fields[1], stage))
      fail(ErrorKind::MalformedInput, csv_path + ":" + std::to_string(line_no));
    std::string metric(fields[3]);
    if (std::string(fields[4]) == "nan")
      value = std::numeric_limits<double>::quiet_NaN();
    else if (!detail::parse_double(fields[4], value))
      fail(ErrorKind::MalformedInput, csv_path + ":" + std::to_string(line_no));
    cells[{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(stage), metric}]
        .push_back(value);
  }

  // per-seed averages over stages 1..4
  std::map<std::uint64_t, std::map<std::string, std::vector<double>>> stage_means;
  for (const auto& [key, values] : cells) {
    auto [seed, stage, metric] = key;
    if (stage < 1 || stage > 4) continue;
    stage_means[seed][metric].push_back(detail::nan_mean(values));
  }
  nlohmann::json j;
  j["seeds"] = nlohmann::json::array();
  std::map<std::string, std::vector<double>> seed_avgs;
  for (const auto& [seed, metrics] : stage_means) {
    nlohmann::json js;
    js["seed"] = seed;
    for (const auto& [metric, values] : metrics) {
      double avg = detail::nan_mean(values);
      js["avg_" + metric] = avg;
      if (!std::isnan(avg)) seed_avgs[metric].push_back(avg);
    }
    j["seeds"].push_back(js);
  }
  for (const auto& [metric, values] : seed_avgs) {
    j["avg_" + metric + "_mean"] = mean(values);
    j["avg_" + metric + "_std"] = stddev(values);
  }
  return j;
}

}  // namespace driftreplay
