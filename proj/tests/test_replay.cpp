#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "driftreplay/reservoir.hpp"
#include "driftreplay/strategies.hpp"
#include "test_support.hpp"

using namespace driftreplay;
using namespace driftreplay::testing;

namespace {

std::vector<ScoreEntry> as_scores(const std::vector<double>& values) {
  std::vector<ScoreEntry> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({i, values[i]});
  return out;
}

// Independent O(n^2) route: rank by (score, index), keep both rank ends.
std::vector<std::size_t> select_extreme_bruteforce(const std::vector<double>& scores,
                                                   std::size_t k) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rank = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (scores[j] < scores[i] || (scores[j] == scores[i] && j < i)) ++rank;
    if (rank < k / 2 || rank >= n - (k - k / 2)) picked.push_back(i);
  }
  return picked;
}

}  // namespace

TEST_CASE("select_extreme hand examples") {
  SECTION("keep both ends") {
    auto picked = select_extreme(as_scores({-3, -1, 0, 2, 5}), 3);
    CHECK(picked == std::vector<std::size_t>{0, 3, 4});
  }
  SECTION("boundaries") {
    auto none = select_extreme(as_scores({1, 2, 3}), 0);
    CHECK(none.empty());
    auto all = select_extreme(as_scores({1, 2, 3}), 3);
    CHECK(all == std::vector<std::size_t>{0, 1, 2});
  }
  SECTION("all-equal scores fall back to index order") {
    auto picked = select_extreme(as_scores({1, 1, 1, 1}), 2);
    CHECK(picked == std::vector<std::size_t>{0, 3});
  }
  SECTION("K too large") {
    CHECK_THROWS_AS(select_extreme(as_scores({1, 2}), 3), Error);
  }
  SECTION("non-finite scores are rejected") {
    CHECK_THROWS_AS(select_extreme(as_scores({1.0, std::nan("")}), 1), Error);
  }
}

TEST_CASE("select_extreme matches brute force exhaustively for small inputs") {
  // every score pattern over a 3-letter alphabet, every K, n <= 8
  for (std::size_t n = 1; n <= 8; ++n) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 3;
    for (std::size_t code = 0; code < combos; ++code) {
      std::vector<double> scores(n);
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(c % 3);
        c /= 3;
      }
      for (std::size_t k = 0; k <= n; ++k) {
        auto fast = select_extreme(as_scores(scores), k);
        auto slow = select_extreme_bruteforce(scores, k);
        REQUIRE(fast == slow);
      }
    }
  }
}

TEST_CASE("select_extreme matches brute force on random inputs") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  std::uniform_int_distribution<int> quantize(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::size_t n = 2 + gen() % 120;
    std::vector<double> scores(n);
    for (auto& s : scores) s = quantize(gen) ? std::round(val(gen)) : val(gen);
    std::size_t k = gen() % (n + 1);
    CHECK(select_extreme(as_scores(scores), k) == select_extreme_bruteforce(scores, k));
  }
}

TEST_CASE("select_extreme properties") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 1 + gen() % 40;
    std::vector<double> scores(n);
    for (auto& s : scores) s = val(gen);
    std::size_t k = gen() % (n + 1);
    auto picked = select_extreme(as_scores(scores), k);

    SECTION("size is exactly K") {}
    CHECK(picked.size() == k);
    CHECK(std::set<std::size_t>(picked.begin(), picked.end()).size() == k);

    // positive affine transforms preserve the selection
    double a = 0.1 + std::abs(val(gen));
    double b = val(gen);
    std::vector<double> transformed(n);
    for (std::size_t i = 0; i < n; ++i) transformed[i] = a * scores[i] + b;
    CHECK(select_extreme(as_scores(transformed), k) == picked);
  }
}

TEST_CASE("megg_select on a hand-solved scalar toy") {
  BiasModel model;
  std::vector<InteractionRecord> data;
  for (int y = 1; y <= 5; ++y) data.push_back(rec(0, 0, y, y));

  TrainingSnapshots snaps;
  snaps.theta_hat = model.params_at(2.0);        // V = mean(2 - y) = -1
  snaps.theta_hat_prime = model.params_at(0.0);  // g(z) = -y, so s_k = y

  SECTION("extreme records are kept") {
    auto kept = megg_select(data, snaps, model, 3, LossKind::SquaredError, ParamSelection::Full);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].rating == 1.0);
    CHECK(kept[1].rating == 4.0);
    CHECK(kept[2].rating == 5.0);
  }
  SECTION("K = |D| is the identity") {
    auto kept = megg_select(data, snaps, model, data.size(), LossKind::SquaredError,
                            ParamSelection::Full);
    CHECK(kept == data);
  }
  SECTION("zero reference vector degenerates to tie-break order") {
    TrainingSnapshots flat = snaps;
    flat.theta_hat = model.params_at(3.0);  // exact minimizer, V = 0
    auto kept = megg_select(data, flat, model, 2, LossKind::SquaredError, ParamSelection::Full);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].rating == 1.0);  // index 0 from the low end
    CHECK(kept[1].rating == 5.0);  // index 4 from the high end
  }
}

TEST_CASE("gdumb_select sampling behavior") {
  std::vector<InteractionRecord> data;
  for (int i = 0; i < 10; ++i) data.push_back(rec(i, 0, 1.0, i));

  SECTION("boundaries and determinism") {
    std::mt19937 rng(5);
    CHECK(gdumb_select(data, data.size(), rng) == data);
    CHECK(gdumb_select(data, 0, rng).empty());

    std::mt19937 a(42), b(42);
    CHECK(gdumb_select(data, 4, a) == gdumb_select(data, 4, b));
    CHECK_THROWS_AS(gdumb_select(data, 11, a), Error);
  }
  SECTION("inclusion frequency matches the hypergeometric expectation") {
    std::mt19937 rng(123);
    std::vector<int> hits(10, 0);
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      auto sample = gdumb_select(data, 5, rng);
      for (const auto& r : sample) hits[static_cast<std::size_t>(r.user_id)]++;
    }
    for (int i = 0; i < 10; ++i) {
      double freq = static_cast<double>(hits[i]) / trials;
      CHECK(std::abs(freq - 0.5) < 0.02);
    }
  }
}

namespace {
struct FixedFeatureModel {
  std::vector<std::vector<double>> feats;
  std::vector<double> extract_feature(const ParamSet&, const InteractionRecord& r) const {
    return feats.at(static_cast<std::size_t>(r.user_id));
  }
};
}  // namespace

TEST_CASE("icarl_select keeps records nearest the feature center") {
  FixedFeatureModel model;
  model.feats = {{0.0}, {0.0}, {10.0}};
  std::vector<InteractionRecord> data = {rec(0, 0, 1.0, 0), rec(1, 0, 1.0, 1), rec(2, 0, 1.0, 2)};
  ParamSet unused;

  auto kept = icarl_select(data, 2, model, unused);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].user_id == 0);
  CHECK(kept[1].user_id == 1);

  SECTION("K = |D| keeps everything") {
    CHECK(icarl_select(data, 3, model, unused) == data);
  }
  SECTION("identical features tie-break by index") {
    FixedFeatureModel flat;
    flat.feats = {{1.0}, {1.0}, {1.0}};
    auto first = icarl_select(data, 2, flat, unused);
    CHECK(first[0].user_id == 0);
    CHECK(first[1].user_id == 1);
  }
}

TEST_CASE("mir_select keeps the records the foreseen update hurts most") {
  BiasModel model;
  std::vector<InteractionRecord> data = {rec(0, 0, 5.0, 0), rec(0, 0, 0.0, 1), rec(0, 0, 5.0, 2),
                                         rec(0, 0, 0.0, 3)};
  std::vector<InteractionRecord> incoming = {rec(0, 0, 0.0, 10), rec(0, 0, 0.0, 11)};
  ParamSet theta = model.params_at(2.5);

  SECTION("records pulled away from are selected first") {
    auto kept = mir_select(data, 2, model, theta, incoming, 0.5, LossKind::SquaredError);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].rating == 5.0);
    CHECK(kept[1].rating == 5.0);
  }
  SECTION("zero foreseen gradient degenerates to index order") {
    std::vector<InteractionRecord> neutral = {rec(0, 0, 2.5, 10), rec(0, 0, 2.5, 11)};
    auto kept = mir_select(data, 2, model, theta, neutral, 0.5, LossKind::SquaredError);
    CHECK(kept[0].timestamp == 0);
    CHECK(kept[1].timestamp == 1);
  }
  SECTION("K = |D| and empty increment") {
    CHECK(mir_select(data, 4, model, theta, incoming, 0.5, LossKind::SquaredError) == data);
    CHECK_THROWS_AS(mir_select(data, 2, model, theta, {}, 0.5, LossKind::SquaredError), Error);
  }
}

TEST_CASE("reservoir_update merges chronologically with stable ties") {
  std::vector<InteractionRecord> kept = {rec(1, 0, 1.0, 1), rec(2, 0, 1.0, 2)};
  std::vector<InteractionRecord> incoming = {rec(3, 0, 1.0, 2), rec(4, 0, 1.0, 3)};

  Reservoir r = reservoir_update(kept, incoming, 10);
  REQUIRE(r.size() == 4);
  CHECK(r.records()[0].user_id == 1);
  CHECK(r.records()[1].user_id == 2);  // kept wins the ts=2 tie
  CHECK(r.records()[2].user_id == 3);
  CHECK(r.records()[3].user_id == 4);
  CHECK(r.chronological());

  SECTION("empty kept set") {
    Reservoir d = reservoir_update({}, incoming, 10);
    CHECK(d.records() == incoming);
  }
  SECTION("capacity is enforced") {
    CHECK_THROWS_AS(reservoir_update(kept, incoming, 3), Error);
  }
  SECTION("exact fill") {
    Reservoir full = reservoir_update(kept, incoming, 4);
    CHECK(full.size() == full.capacity());
  }
}

TEST_CASE("reservoir never exceeds capacity across many stages") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const std::size_t capacity = 50;
  std::vector<InteractionRecord> records;
  for (std::size_t i = 0; i < capacity; ++i) records.push_back(rec(0, 0, 1.0, i));
  Reservoir res(records, capacity);

  std::int64_t next_ts = capacity;
  for (int stage = 0; stage < 30; ++stage) {
    std::size_t incoming_n = 1 + gen() % 8;
    std::vector<InteractionRecord> incoming;
    for (std::size_t i = 0; i < incoming_n; ++i) incoming.push_back(rec(0, 0, 1.0, next_ts++));

    std::vector<ScoreEntry> scores;
    for (std::size_t i = 0; i < res.size(); ++i) scores.push_back({i, val(gen)});
    auto kept = megg_select_scored(res.records(), scores, capacity - incoming_n);
    res = reservoir_update(kept, incoming, capacity);

    REQUIRE(res.size() <= capacity);
    REQUIRE(res.size() == capacity);
    REQUIRE(res.chronological());
  }
}

TEST_CASE("selection plan arithmetic") {
  for (std::size_t k = 0; k <= 9; ++k) {
    SelectionPlan plan = SelectionPlan::of(k);
    CHECK(plan.keep_low + plan.keep_high == plan.keep);
    CHECK(plan.keep_low == k / 2);
  }
  CHECK(SelectionPlan::for_capacity(100, 10).keep == 90);
  CHECK(SelectionPlan::for_ratio(100, 0.7).keep == 70);
  CHECK(SelectionPlan::for_ratio(10, 0.25).keep == 3);  // round, not ceil
  CHECK_THROWS_AS(SelectionPlan::for_ratio(10, 1.5), Error);
  CHECK_THROWS_AS(SelectionPlan::for_capacity(5, 6), Error);
}
