#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/record.hpp"

namespace driftreplay {

/// First-seen dense remapping of raw string ids to [0, count).
class IdMap {
 public:
  std::int64_t intern(const std::string& raw) {
    auto [it, inserted] = to_dense_.try_emplace(raw, static_cast<std::int64_t>(to_raw_.size()));
    if (inserted) to_raw_.push_back(raw);
    return it->second;
  }
  std::optional<std::int64_t> lookup(const std::string& raw) const {
    auto it = to_dense_.find(raw);
    if (it == to_dense_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const { return to_raw_.size(); }
  const std::vector<std::string>& raw_ids() const { return to_raw_; }

 private:
  std::unordered_map<std::string, std::int64_t> to_dense_;
  std::vector<std::string> to_raw_;
};

struct LoadReport {
  std::vector<InteractionRecord> records;
  IdMap users;
  IdMap items;
  std::vector<std::pair<std::size_t, std::string>> malformed;  // (line number, reason)
  std::vector<std::string> warnings;
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

/// Shared line loop for the two text formats. `parse_line` returns a
/// reason string on failure. Aborts when more than 1% of non-empty lines
/// are malformed.
template <class ParseLine>
LoadReport load_lines(const std::string& path, std::size_t first_data_line, ParseLine&& parse_line,
                      std::ifstream& in) {
  LoadReport report;
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_lines = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no < first_data_line) continue;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    ++data_lines;
    std::string reason = parse_line(view, report);
    if (!reason.empty()) report.malformed.emplace_back(line_no, reason);
  }
  if (data_lines == 0)
    report.warnings.push_back(path + ": no data lines");
  else if (report.malformed.size() * 100 > data_lines)
    fail(ErrorKind::MalformedInput, path + ": " + std::to_string(report.malformed.size()) +
                                        " malformed of " + std::to_string(data_lines) + " lines");
  return report;
}

}  // namespace detail

/// MovieLens-style `UserID::MovieID::Rating::Timestamp` lines. Raw ids are
/// remapped to dense indices in first-seen order.
inline LoadReport load_movielens(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  return detail::load_lines(path, 1, [](std::string_view view, LoadReport& report) -> std::string {
    auto fields = detail::split(view, "::");
    if (fields.size() != 4) return "expected 4 '::' fields";
    std::int64_t raw_user, raw_item, ts;
    double rating;
    if (!detail::parse_int(fields[0], raw_user)) return "bad user id";
    if (!detail::parse_int(fields[1], raw_item)) return "bad movie id";
    if (!detail::parse_double(fields[2], rating)) return "bad rating";
    if (!detail::parse_int(fields[3], ts)) return "bad timestamp";
    InteractionRecord rec;
    rec.user_id = report.users.intern(std::string(fields[0]));
    rec.item_id = report.items.intern(std::string(fields[1]));
    rec.rating = rating;
    rec.timestamp = ts;
    report.records.push_back(rec);
    return {};
  }, in);
}

/// CSV with the exact header `user,item,rating,timestamp`.
inline LoadReport load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) {
    LoadReport empty;
    empty.warnings.push_back(path + ": no data lines");
    return empty;
  }
  if (detail::trim(header) != "user,item,rating,timestamp")
    fail(ErrorKind::HeaderMismatch, path + ": got '" + header + "'");
  return detail::load_lines(path, 1, [](std::string_view view, LoadReport& report) -> std::string {
    auto fields = detail::split(view, ",");
    if (fields.size() != 4) return "expected 4 comma fields";
    double rating;
    std::int64_t ts;
    if (!detail::parse_double(detail::trim(fields[2]), rating)) return "bad rating";
    if (!detail::parse_int(detail::trim(fields[3]), ts)) return "bad timestamp";
    InteractionRecord rec;
    rec.user_id = report.users.intern(std::string(detail::trim(fields[0])));
    rec.item_id = report.items.intern(std::string(detail::trim(fields[1])));
    rec.rating = rating;
    rec.timestamp = ts;
    report.records.push_back(rec);
    return {};
  }, in);
}

/// id_map.csv schema: raw_id,dense_id,kind.
inline void write_id_map_csv(const std::string& path, const IdMap& users, const IdMap& items) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "raw_id,dense_id,kind\n";
  for (std::size_t i = 0; i < users.raw_ids().size(); ++i)
    out << users.raw_ids()[i] << "," << i << ",user\n";
  for (std::size_t i = 0; i < items.raw_ids().size(); ++i)
    out << items.raw_ids()[i] << "," << i << ",item\n";
}

enum class BinarizeRule {
  MovieLens,  // 1,2 -> 0; 4,5 -> 1; 3 -> none
  Taobao,     // 1,2 -> 0; 3,4 -> 1
};

/// Binary label for a rating under the rule; nullopt drops the record
/// from the classification task.
inline std::optional<int> binarize(double rating, BinarizeRule rule) {
  double rounded = std::round(rating);
  if (std::abs(rating - rounded) > 1e-9)
    fail(ErrorKind::InvalidRating, "rating " + std::to_string(rating) + " is not integral");
  int r = static_cast<int>(rounded);
  switch (rule) {
    case BinarizeRule::MovieLens:
      if (r == 1 || r == 2) return 0;
      if (r == 4 || r == 5) return 1;
      if (r == 3) return std::nullopt;
      fail(ErrorKind::InvalidRating, "rating " + std::to_string(r) + " outside [1,5]");
    case BinarizeRule::Taobao:
      if (r == 1 || r == 2) return 0;
      if (r == 3 || r == 4) return 1;
      fail(ErrorKind::InvalidRating, "rating " + std::to_string(r) + " outside [1,4]");
  }
  fail(ErrorKind::InvalidConfig, "unknown binarize rule");
}

/// Applies the rule to every record, writing labels in place. Ratings in
/// the dropped bucket keep kNoLabel. Non-integral ratings (synthetic
/// corpora) are labeled by their rounded value.
inline void label_records(std::vector<InteractionRecord>& records, BinarizeRule rule) {
  for (InteractionRecord& rec : records) {
    auto label = binarize(std::round(rec.rating), rule);
    rec.label = label ? *label : InteractionRecord::kNoLabel;
  }
}

/// Listen-count style relabeling: each (user, item) pair's rating becomes
/// a frequency bucket of its occurrence count in the loaded window
/// (>=30 -> 5, 15..29 -> 4, 5..14 -> 3, 1..4 -> 2). Events keep their
/// timestamps; zero-count pairs never appear in an interaction log.
inline std::vector<InteractionRecord> apply_frequency_ratings(std::vector<InteractionRecord> records) {
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> counts;
  for (const InteractionRecord& rec : records) counts[{rec.user_id, rec.item_id}]++;
  for (InteractionRecord& rec : records) {
    std::size_t n = counts[{rec.user_id, rec.item_id}];
    rec.rating = n >= 30 ? 5.0 : n >= 15 ? 4.0 : n >= 5 ? 3.0 : 2.0;
  }
  return records;
}

}  // namespace driftreplay
