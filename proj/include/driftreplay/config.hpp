#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "driftreplay/arch.hpp"
#include "driftreplay/error.hpp"
#include "driftreplay/loaders.hpp"
#include "driftreplay/sparse_grad.hpp"
#include "driftreplay/synth.hpp"
#include "driftreplay/train.hpp"

namespace driftreplay {

enum class StrategyKind { Megg, GDumb, ICarl, Mir, FineTune, FullBatch };
enum class SchemeKind { A, B, C, D };
enum class EvalMode { All, Next };
enum class DataSource { Synth, MovieLens, Csv };

inline const char* to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::Megg: return "megg";
    case StrategyKind::GDumb: return "gdumb";
    case StrategyKind::ICarl: return "icarl";
    case StrategyKind::Mir: return "mir";
    case StrategyKind::FineTune: return "finetune";
    case StrategyKind::FullBatch: return "fullbatch";
  }
  return "?";
}

/// Everything one benchmark run needs. Parsed from a `key = value` text
/// file; see the README for the full key list.
struct ProtocolConfig {
  DataSource source = DataSource::Synth;
  std::string path;
  bool frequency_ratings = false;
  BinarizeRule binarize_rule = BinarizeRule::MovieLens;
  SynthConfig synth;
  std::uint32_t synth_seed = 42;

  std::size_t n_blocks = 15;
  std::size_t reservoir_blocks = 10;

  ArchDescriptor model;  // num_users/num_items auto-filled from the data when zero
  TrainConfig train;     // seed is overridden per run seed

  StrategyKind strategy = StrategyKind::Megg;
  SchemeKind scheme = SchemeKind::A;
  std::optional<double> replay_ratio;
  ParamSelection selection = ParamSelection::Selected;
  EvalMode eval = EvalMode::All;
  std::vector<std::uint32_t> seeds = {1, 2, 3, 4, 5};
};

inline void validate(const ProtocolConfig& cfg) {
  if (cfg.reservoir_blocks == 0 || cfg.reservoir_blocks >= cfg.n_blocks)
    fail(ErrorKind::InvalidConfig, "reservoir_blocks must be in [1, n_blocks)");
  if (cfg.seeds.empty()) fail(ErrorKind::InvalidConfig, "need at least one seed");
  if (cfg.replay_ratio && !(*cfg.replay_ratio >= 0.0 && *cfg.replay_ratio <= 1.0))
    fail(ErrorKind::InvalidConfig, "replay_ratio outside [0,1]");
  if (cfg.source != DataSource::Synth && cfg.path.empty())
    fail(ErrorKind::InvalidConfig, "file sources need a path");
  validate(cfg.train);
}

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split_csv_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string trimmed(trim(item));
    if (!trimmed.empty()) out.push_back(trimmed);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::stringstream ss(value);
  T out;
  ss >> out;
  if (ss.fail() || !ss.eof())
    fail(ErrorKind::InvalidConfig, "bad numeric value for " + key + ": '" + value + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = lower(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::InvalidConfig, "bad boolean for " + key + ": '" + value + "'");
}

}  // namespace detail

/// Parses the run configuration from `key = value` lines. '#' starts a
/// comment; unknown keys are errors so typos cannot silently change runs.
inline ProtocolConfig parse_config_text(const std::string& text) {
  ProtocolConfig cfg;
  std::stringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos)
      view = detail::trim(view.substr(0, hash));
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = detail::lower(std::string(detail::trim(view.substr(0, eq))));
    std::string value(detail::trim(view.substr(eq + 1)));
    std::string lv = detail::lower(value);

    if (key == "data") {
      if (lv == "synth") cfg.source = DataSource::Synth;
      else if (lv == "movielens") cfg.source = DataSource::MovieLens;
      else if (lv == "csv") cfg.source = DataSource::Csv;
      else fail(ErrorKind::InvalidConfig, "unknown data source '" + value + "'");
    } else if (key == "path") {
      cfg.path = value;
    } else if (key == "frequency_ratings") {
      cfg.frequency_ratings = detail::parse_bool(key, value);
    } else if (key == "binarize") {
      if (lv == "movielens") cfg.binarize_rule = BinarizeRule::MovieLens;
      else if (lv == "taobao") cfg.binarize_rule = BinarizeRule::Taobao;
      else fail(ErrorKind::InvalidConfig, "unknown binarize rule '" + value + "'");
    } else if (key == "synth.users") {
      cfg.synth.num_users = detail::parse_number<std::size_t>(key, value);
    } else if (key == "synth.items") {
      cfg.synth.num_items = detail::parse_number<std::size_t>(key, value);
    } else if (key == "synth.records") {
      cfg.synth.num_records = detail::parse_number<std::size_t>(key, value);
    } else if (key == "synth.latent_dim") {
      cfg.synth.latent_dim = detail::parse_number<std::size_t>(key, value);
    } else if (key == "synth.phases") {
      cfg.synth.phases = detail::parse_number<std::size_t>(key, value);
    } else if (key == "synth.drift") {
      cfg.synth.drift = detail::parse_number<double>(key, value);
    } else if (key == "synth.noise") {
      cfg.synth.noise = detail::parse_number<double>(key, value);
    } else if (key == "synth.seed") {
      cfg.synth_seed = detail::parse_number<std::uint32_t>(key, value);
    } else if (key == "blocks") {
      cfg.n_blocks = detail::parse_number<std::size_t>(key, value);
    } else if (key == "reservoir_blocks") {
      cfg.reservoir_blocks = detail::parse_number<std::size_t>(key, value);
    } else if (key == "model") {
      if (lv == "wdl") cfg.model.backbone = Backbone::WideDeep;
      else if (lv == "dcn") cfg.model.backbone = Backbone::CrossNet;
      else if (lv == "nfm") cfg.model.backbone = Backbone::BiInteractionFM;
      else fail(ErrorKind::InvalidConfig, "unknown model '" + value + "' (wdl|dcn|nfm)");
    } else if (key == "embedding_dim") {
      cfg.model.embedding_dim = detail::parse_number<std::size_t>(key, value);
    } else if (key == "hidden") {
      cfg.model.hidden.clear();
      for (const auto& h : detail::split_csv_values(value))
        cfg.model.hidden.push_back(detail::parse_number<std::size_t>(key, h));
    } else if (key == "cross_depth") {
      cfg.model.cross_depth = detail::parse_number<std::size_t>(key, value);
    } else if (key == "head") {
      if (lv == "squared" || lv == "rating") cfg.model.head = LossKind::SquaredError;
      else if (lv == "logistic" || lv == "classification") cfg.model.head = LossKind::Logistic;
      else fail(ErrorKind::InvalidConfig, "unknown head '" + value + "'");
    } else if (key == "epochs") {
      cfg.train.epochs = detail::parse_number<std::size_t>(key, value);
    } else if (key == "batch") {
      cfg.train.batch_size = detail::parse_number<std::size_t>(key, value);
    } else if (key == "lr") {
      cfg.train.learning_rate = detail::parse_number<double>(key, value);
    } else if (key == "optimizer") {
      if (lv == "adam") cfg.train.optimizer = OptimizerKind::Adam;
      else if (lv == "mbgd" || lv == "sgd") cfg.train.optimizer = OptimizerKind::MBGD;
      else fail(ErrorKind::InvalidConfig, "unknown optimizer '" + value + "'");
    } else if (key == "strategy") {
      if (lv == "megg") cfg.strategy = StrategyKind::Megg;
      else if (lv == "gdumb") cfg.strategy = StrategyKind::GDumb;
      else if (lv == "icarl") cfg.strategy = StrategyKind::ICarl;
      else if (lv == "mir") cfg.strategy = StrategyKind::Mir;
      else if (lv == "finetune") cfg.strategy = StrategyKind::FineTune;
      else if (lv == "fullbatch") cfg.strategy = StrategyKind::FullBatch;
      else fail(ErrorKind::InvalidConfig, "unknown strategy '" + value + "'");
    } else if (key == "scheme") {
      if (lv == "a") cfg.scheme = SchemeKind::A;
      else if (lv == "b") cfg.scheme = SchemeKind::B;
      else if (lv == "c") cfg.scheme = SchemeKind::C;
      else if (lv == "d") cfg.scheme = SchemeKind::D;
      else fail(ErrorKind::InvalidConfig, "unknown scheme '" + value + "'");
    } else if (key == "replay_ratio") {
      cfg.replay_ratio = detail::parse_number<double>(key, value);
    } else if (key == "selection") {
      if (lv == "selected") cfg.selection = ParamSelection::Selected;
      else if (lv == "full") cfg.selection = ParamSelection::Full;
      else fail(ErrorKind::InvalidConfig, "unknown selection '" + value + "'");
    } else if (key == "eval") {
      if (lv == "all") cfg.eval = EvalMode::All;
      else if (lv == "next") cfg.eval = EvalMode::Next;
      else fail(ErrorKind::InvalidConfig, "unknown eval mode '" + value + "'");
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : detail::split_csv_values(value))
        cfg.seeds.push_back(detail::parse_number<std::uint32_t>(key, s));
    } else {
      fail(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

inline ProtocolConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace driftreplay
