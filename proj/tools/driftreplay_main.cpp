// Command line surface for the incremental-recommendation replay bench:
// data preparation, protocol runs, score dumps, estimator validation
// suites, and report aggregation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "driftreplay/driftreplay.hpp"
#include "driftreplay/validate.hpp"

namespace dr = driftreplay;

namespace {

int cmd_prepare(const std::string& input, const std::string& format, std::size_t blocks,
                const std::string& out_dir, bool frequency_ratings, const std::string& binarize) {
  dr::LoadReport loaded =
      format == "movielens" ? dr::load_movielens(input) : dr::load_csv(input);
  for (const auto& [line, reason] : loaded.malformed)
    std::fprintf(stderr, "warning: %s line %zu: %s\n", input.c_str(), line, reason.c_str());
  for (const auto& w : loaded.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  auto records = loaded.records;
  if (frequency_ratings) records = dr::apply_frequency_ratings(std::move(records));
  dr::BinarizeRule rule =
      binarize == "taobao" ? dr::BinarizeRule::Taobao : dr::BinarizeRule::MovieLens;
  dr::label_records(records, rule);

  std::filesystem::create_directories(out_dir);
  dr::write_id_map_csv(out_dir + "/id_map.csv", loaded.users, loaded.items);

  dr::BlockSet bs = dr::split_blocks(std::move(records), blocks);
  {
    std::ofstream out(out_dir + "/records.csv");
    if (!out) dr::fail(dr::ErrorKind::IoError, "cannot write " + out_dir + "/records.csv");
    out << "user,item,rating,timestamp\n";
    for (const auto& block : bs.blocks)
      for (const auto& r : block)
        out << r.user_id << "," << r.item_id << "," << dr::detail::format_double(r.rating) << ","
            << r.timestamp << "\n";
  }
  nlohmann::json summary;
  summary["records"] = bs.total();
  summary["users"] = loaded.users.size();
  summary["items"] = loaded.items.size();
  summary["malformed_lines"] = loaded.malformed.size();
  summary["blocks"] = nlohmann::json::array();
  for (std::size_t b = 0; b < bs.blocks.size(); ++b)
    summary["blocks"].push_back({{"index", b},
                                 {"size", bs.blocks[b].size()},
                                 {"first_timestamp", bs.first_timestamp(b)},
                                 {"last_timestamp", bs.last_timestamp(b)}});
  std::ofstream out(out_dir + "/summary.json");
  out << summary.dump(2) << "\n";
  std::printf("prepared %zu records (%zu users, %zu items) into %zu blocks under %s\n",
              bs.total(), loaded.users.size(), loaded.items.size(), bs.blocks.size(),
              out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  dr::ProtocolConfig cfg = dr::load_config_file(config_path);
  dr::RunReport report = dr::run_protocol(cfg);
  dr::emit_report(report, out_dir);
  std::printf("strategy=%s  seeds=%zu\n", dr::to_string(cfg.strategy), cfg.seeds.size());
  std::printf("avg RMSE (stages 1-4): %.4f +/- %.4f\n", report.avg_rmse_mean,
              report.avg_rmse_std);
  std::printf("avg AUC  (stages 1-4): %.4f +/- %.4f\n", report.avg_auc_mean, report.avg_auc_std);
  std::printf("report written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_score(const std::string& config_path, std::size_t stage, const std::string& out_file,
              std::uint32_t seed_override, bool seed_given) {
  dr::ProtocolConfig cfg = dr::load_config_file(config_path);
  if (cfg.strategy != dr::StrategyKind::Megg)
    dr::fail(dr::ErrorKind::InvalidConfig, "score needs strategy = megg");
  std::uint32_t seed = seed_given ? seed_override : cfg.seeds.front();

  auto records = dr::load_protocol_records(cfg);
  dr::BlockSet bs = dr::split_blocks(std::move(records), cfg.n_blocks);
  std::vector<dr::InteractionRecord> flat;
  for (const auto& b : bs.blocks) flat.insert(flat.end(), b.begin(), b.end());
  dr::ArchDescriptor arch = dr::resolve_arch(cfg, flat);

  dr::StageScores captured;
  bool seen = false;
  dr::ScoreHook hook = [&](const dr::StageScores& s) {
    if (s.stage == stage) {
      captured = s;
      seen = true;
    }
  };
  dr::run_protocol_seed(cfg, bs, arch, seed, &hook, stage);
  if (!seen)
    dr::fail(dr::ErrorKind::InvalidConfig, "stage " + std::to_string(stage) + " never scored");

  std::ofstream out(out_file);
  if (!out) dr::fail(dr::ErrorKind::IoError, "cannot write " + out_file);
  out << "sample_id,user,item,timestamp,ggscore\n";
  for (const auto& entry : captured.scores) {
    const auto& r = captured.reservoir[entry.index];
    out << entry.index << "," << r.user_id << "," << r.item_id << "," << r.timestamp << ","
        << dr::detail::format_double(entry.score) << "\n";
  }
  std::printf("stage %zu: wrote %zu scores to %s\n", stage, captured.scores.size(),
              out_file.c_str());
  return 0;
}

int cmd_validate(const std::string& suite, const std::string& out_dir, std::size_t cases,
                 std::uint32_t seed) {
  if (suite == "eq5") {
    dr::Eq5Report r = dr::validate_eq5(cases == 0 ? 1000 : cases, seed);
    std::printf("closed-form delta vs simulated updates over %zu cases\n", r.cases);
    std::printf("max relative error: %.3e  (%.2fs)\n", r.max_rel_error, r.seconds);
    bool ok = r.max_rel_error <= 1e-9;
    std::printf("%s (tolerance 1e-9)\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
  }
  if (suite == "estimator") {
    dr::EstimatorReport r = dr::validate_estimator(cases == 0 ? 200 : cases, 500, seed);
    std::printf("quadratic-toy second-order gap over %zu cases: %.3e\n", r.quadratic_cases,
                r.max_quadratic_gap);
    std::printf("sign agreement near convergence: %zu/%zu (%.1f%%)  (%.2fs)\n",
                r.sign_agreements, r.sign_cases, 100.0 * r.sign_agreement_rate(), r.seconds);
    bool ok = r.max_quadratic_gap <= 1e-9 && r.sign_agreement_rate() >= 0.9;
    std::printf("%s (tolerances 1e-9, 90%%)\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
  }
  if (suite == "correlation") {
    dr::CorrelationConfig cfg;
    if (seed != 0) cfg.seed = seed;
    dr::CorrelationStudyResult result = dr::correlation_study(cfg);
    std::filesystem::create_directories(out_dir);
    dr::write_influence_csv(result.report, out_dir + "/influence.csv");
    {
      std::ofstream out(out_dir + "/correlation.json");
      out << dr::correlation_summary_json(result).dump(2) << "\n";
    }
    std::printf("one-step vs retrain Pearson by epoch:\n");
    for (std::size_t e = 0; e < result.epoch_vs_retrain.size(); ++e)
      std::printf("  epoch %2zu: %.4f\n", e + 1, result.epoch_vs_retrain[e]);
    std::printf("wrote %s/influence.csv and %s/correlation.json\n", out_dir.c_str(),
                out_dir.c_str());
    return 0;
  }
  dr::fail(dr::ErrorKind::InvalidConfig, "unknown suite '" + suite + "'");
}

int cmd_report(const std::string& in_dir) {
  nlohmann::json agg = dr::aggregate_stage_csv(in_dir + "/stages.csv");
  std::ofstream out(in_dir + "/aggregated.json");
  out << agg.dump(2) << "\n";
  std::cout << agg.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"influence-guided experience replay benchmark for neural recommenders"};
  app.require_subcommand(1);

  std::string input, format = "movielens", out_dir = ".", out_file, config_path, suite, in_dir;
  std::string binarize = "movielens";
  std::size_t blocks = 15, stage = 1, cases = 0;
  std::uint32_t seed = 0;
  bool frequency_ratings = false;
  bool seed_given = false;

  auto* prepare = app.add_subcommand("prepare", "normalize a raw interaction file into blocks");
  prepare->add_option("--input", input, "raw interaction file")->required();
  prepare->add_option("--format", format, "movielens|csv")
      ->check(CLI::IsMember({"movielens", "csv"}));
  prepare->add_option("--blocks", blocks, "number of chronological blocks");
  prepare->add_option("--out", out_dir, "output directory")->required();
  prepare->add_flag("--frequency-ratings", frequency_ratings,
                    "re-rate events by (user,item) occurrence count buckets");
  prepare->add_option("--binarize", binarize, "labeling rule: movielens|taobao")
      ->check(CLI::IsMember({"movielens", "taobao"}));

  auto* run = app.add_subcommand("run", "run the staged protocol described by a config file");
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--out", out_dir, "output directory")->required();

  auto* score = app.add_subcommand("score", "dump per-sample GGscores for one stage");
  score->add_option("--config", config_path, "key = value config file")->required();
  score->add_option("--stage", stage, "stage whose scores to dump (1-based)")->required();
  score->add_option("--out", out_file, "output csv")->required();
  score->add_option("--seed", seed, "run seed (default: first config seed)")
      ->each([&](const std::string&) { seed_given = true; });

  auto* validate = app.add_subcommand("validate", "estimator and selection validation suites");
  validate->add_option("--suite", suite, "eq5|estimator|correlation")
      ->required()
      ->check(CLI::IsMember({"eq5", "estimator", "correlation"}));
  validate->add_option("--out", out_dir, "output directory for correlation artifacts");
  validate->add_option("--cases", cases, "case count override");
  validate->add_option("--seed", seed, "random seed");

  auto* report = app.add_subcommand("report", "aggregate a run directory across seeds");
  report->add_option("--in", in_dir, "directory containing stages.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed())
      return cmd_prepare(input, format, blocks, out_dir, frequency_ratings, binarize);
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (score->parsed()) return cmd_score(config_path, stage, out_file, seed, seed_given);
    if (validate->parsed()) return cmd_validate(suite, out_dir, cases, seed == 0 ? 9001 : seed);
    if (report->parsed()) return cmd_report(in_dir);
  } catch (const dr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
