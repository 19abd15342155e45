#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "driftreplay/loss.hpp"
#include "driftreplay/optim.hpp"
#include "driftreplay/rec_model.hpp"
#include "driftreplay/train.hpp"
#include "test_support.hpp"

using namespace driftreplay;
using namespace driftreplay::testing;

TEST_CASE("loss values and gradients") {
  CHECK(loss_value(3.0, 1.0, LossKind::SquaredError) == 2.0);
  CHECK(loss_value(4.2, 4.2, LossKind::SquaredError) == 0.0);
  CHECK(loss_value(0.0, 1.0, LossKind::Logistic) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_grad(3.0, 1.0, LossKind::SquaredError) == 2.0);
  CHECK(loss_grad(0.0, 1.0, LossKind::Logistic) == Catch::Approx(-0.5));

  CHECK_THROWS_AS(loss_value(0.0, 0.5, LossKind::Logistic), Error);
  CHECK_THROWS_AS(loss_grad(0.0, 2.0, LossKind::Logistic), Error);

  // softplus form stays finite for extreme logits
  CHECK(std::isfinite(loss_value(1e4, 0.0, LossKind::Logistic)));
  CHECK(std::isfinite(loss_value(-1e4, 1.0, LossKind::Logistic)));
}

TEST_CASE("forward on degenerate parameter sets") {
  for (Backbone bb : {Backbone::WideDeep, Backbone::CrossNet, Backbone::BiInteractionFM}) {
    auto arch = small_arch(bb, 3, 4, 2, {3});
    RecModel model(arch);
    ParamSet zeros;
    for (const auto& spec : model.group_specs())
      zeros.add_group(spec.name, Matrix(spec.rows, spec.cols, 0.0));
    CHECK(model.forward(zeros, rec(1, 2, 3.0)) == 0.0);

    ParamSet bias_only = zeros;
    bias_only.at("dense_last_b").data[0] = 2.0;
    CHECK(model.forward(bias_only, rec(0, 0, 1.0)) == 2.0);
  }
}

TEST_CASE("forward matches a hand-traced pass on a seeded toy model") {
  // 2x2 embeddings, one hidden layer of width 2, WideDeep head.
  auto arch = small_arch(Backbone::WideDeep, 2, 2, 2, {2});
  auto [model, params] = build_model(arch, 1);
  InteractionRecord r = rec(0, 0, 3.5);

  const Matrix& ue = params.at("user_emb");
  const Matrix& ie = params.at("item_emb");
  const Matrix& W0 = params.at("dense_0_W");
  const Matrix& b0 = params.at("dense_0_b");
  const Matrix& Wl = params.at("dense_last_W");
  const Matrix& bl = params.at("dense_last_b");
  const Matrix& ww = params.at("wide_w");
  const Matrix& wb = params.at("wide_b");

  double x0[4] = {ue(0, 0), ue(0, 1), ie(0, 0), ie(0, 1)};
  double h[2];
  for (int row = 0; row < 2; ++row) {
    double z = b0.data[row];
    for (int c = 0; c < 4; ++c) z += W0(row, c) * x0[c];
    h[row] = z > 0 ? z : 0;
  }
  double expected = bl.data[0] + Wl(0, 0) * h[0] + Wl(0, 1) * h[1];
  expected += ww.data[0] + ww.data[2] + wb.data[0];

  CHECK(model.forward(params, r) == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("out-of-range ids are rejected, never clamped") {
  auto [model, params] = build_model(small_arch(Backbone::WideDeep, 2, 2, 2, {2}), 7);
  CHECK_THROWS_AS(model.forward(params, rec(2, 0, 1.0)), Error);
  CHECK_THROWS_AS(model.forward(params, rec(0, -1, 1.0)), Error);
  try {
    model.forward(params, rec(5, 0, 1.0));
    FAIL("expected IdOutOfRange");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IdOutOfRange);
  }
}

TEST_CASE("batch_grad on the bias-only model") {
  BiasModel model;
  ParamSet theta = model.zero_params();
  std::vector<InteractionRecord> batch = {rec(0, 0, 1.0), rec(0, 0, 3.0)};

  SparseGrad g = batch_grad(model, theta, batch, LossKind::SquaredError);
  CHECK(g.slice({"bias", kWholeGroup})[0] == -2.0);  // mean of -1 and -3

  std::vector<InteractionRecord> single = {batch[0]};
  SparseGrad gs = batch_grad(model, theta, single, LossKind::SquaredError);
  SparseGrad gp = model.per_sample_grad(theta, batch[0], LossKind::SquaredError);
  CHECK(gs == gp);

  std::vector<InteractionRecord> dup = {batch[0], batch[0]};
  CHECK(batch_grad(model, theta, dup, LossKind::SquaredError) == gp);

  CHECK_THROWS_AS(batch_grad(model, theta, std::span<const InteractionRecord>{}, LossKind::SquaredError),
                  Error);
}

TEST_CASE("per_sample_grad Full on the bias-only model") {
  BiasModel model;
  SparseGrad g = model.per_sample_grad(model.zero_params(), rec(0, 0, 1.0), LossKind::SquaredError);
  CHECK(g.slice({"bias", kWholeGroup})[0] == -1.0);
}

TEST_CASE("Selected support is exactly the four declared keys") {
  for (Backbone bb : {Backbone::WideDeep, Backbone::CrossNet, Backbone::BiInteractionFM}) {
    auto [model, params] = build_model(small_arch(bb, 8, 12, 3, {4, 3}), 3);
    SparseGrad g = model.per_sample_grad(params, rec(3, 7, 2.0), LossKind::SquaredError,
                                         ParamSelection::Selected);
    std::vector<GradKey> expected = {
        {"dense_last_W", kWholeGroup},
        {"dense_last_b", kWholeGroup},
        {"item_emb", 7},
        {"user_emb", 3},
    };
    CHECK(g.support() == expected);
  }
}

TEST_CASE("Selected equals Full on the selected support") {
  std::mt19937 gen(11);
  for (Backbone bb : {Backbone::WideDeep, Backbone::CrossNet, Backbone::BiInteractionFM}) {
    auto [model, params] = build_model(small_arch(bb, 5, 6, 3, {4}), 5);
    for (int t = 0; t < 10; ++t) {
      auto records = random_records(gen, 1, 5, 6, LossKind::SquaredError);
      SparseGrad full = model.per_sample_grad(params, records[0], LossKind::SquaredError,
                                              ParamSelection::Full);
      SparseGrad sel = model.per_sample_grad(params, records[0], LossKind::SquaredError,
                                             ParamSelection::Selected);
      for (const auto& [key, values] : sel.entries()) {
        const auto& fv = full.slice(key);
        REQUIRE(fv.size() == values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
          CHECK(std::abs(values[i] - fv[i]) <= 1e-15);
      }
    }
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  // >= 200 accepted random cases across backbones and losses. Entries whose
  // one-sided stencils disagree sit on a ReLU kink and are excluded; the
  // subgradient convention and a central difference differ there by design.
  const double h = 1e-5;
  std::size_t accepted = 0;
  std::size_t checked_entries = 0;
  std::uint32_t case_seed = 0;
  const Backbone bbs[] = {Backbone::WideDeep, Backbone::CrossNet, Backbone::BiInteractionFM};
  while (accepted < 210 && case_seed < 2000) {
    std::mt19937 gen(1000 + case_seed);
    ++case_seed;
    Backbone bb = bbs[case_seed % 3];
    LossKind kind = case_seed % 2 == 0 ? LossKind::SquaredError : LossKind::Logistic;
    auto [model, params] = build_model(small_arch(bb, 3, 3, 2, {3, 2}, kind), 2000 + case_seed);
    auto records = random_records(gen, 1, 3, 3, kind);
    const InteractionRecord& r = records[0];

    FdProbe probe = fd_per_sample_grad(model, params, r, kind, h);
    SparseGrad g = model.per_sample_grad(params, r, kind, ParamSelection::Full);
    ParamSet dense = densify(g, params);
    for (const auto& [name, m] : dense.groups()) {
      const Matrix& f = probe.central.at(name);
      const Matrix& a = probe.asym.at(name);
      for (std::size_t i = 0; i < m.data.size(); ++i) {
        if (a.data[i] > 1e-4 * std::max(1.0, std::abs(f.data[i]))) continue;  // kink
        INFO(name << "[" << i << "] case " << case_seed);
        CHECK(close_rel(m.data[i], f.data[i], 1e-5, 1e-6));
        ++checked_entries;
      }
    }
    ++accepted;
  }
  REQUIRE(accepted >= 200);
  REQUIRE(checked_entries > 8000);  // the kink filter must not eat the test
}

TEST_CASE("batch_grad equals the mean of per-sample gradients") {
  std::mt19937 gen(21);
  auto [model, params] = build_model(small_arch(Backbone::CrossNet, 6, 6, 3, {4}), 9);
  auto records = random_records(gen, 17, 6, 6, LossKind::SquaredError);
  SparseGrad batch = batch_grad(model, params, records, LossKind::SquaredError);

  SparseGrad mean;
  for (const auto& r : records)
    mean.add(model.per_sample_grad(params, r, LossKind::SquaredError, ParamSelection::Full));
  mean.scale(1.0 / static_cast<double>(records.size()));

  REQUIRE(batch.support() == mean.support());
  for (const auto& [key, values] : batch.entries()) {
    const auto& mv = mean.slice(key);
    for (std::size_t i = 0; i < values.size(); ++i)
      CHECK(close_rel(values[i], mv[i], 1e-12, 1e-12));
  }
}

TEST_CASE("apply_mbgd pins the update rule") {
  ParamSet theta;
  theta.add_group("w", Matrix(2, 1, 0.0));
  SparseGrad g;
  double slice[2] = {1.0, 2.0};
  g.accumulate({"w", kWholeGroup}, slice);

  ParamSet next = apply_mbgd(theta, g, 0.1);
  CHECK(next.at("w").data[0] == Catch::Approx(-0.1).margin(1e-15));
  CHECK(next.at("w").data[1] == Catch::Approx(-0.2).margin(1e-15));

  CHECK(apply_mbgd(theta, SparseGrad{}, 0.1) == theta);
  CHECK(apply_mbgd(theta, g, 0.0) == theta);
}

TEST_CASE("apply_mbgd leaves untouched entries bit-identical") {
  auto [model, params] = build_model(small_arch(Backbone::WideDeep, 4, 4, 2, {2}), 13);
  SparseGrad g = model.per_sample_grad(params, rec(1, 2, 4.0), LossKind::SquaredError,
                                       ParamSelection::Selected);
  ParamSet next = apply_mbgd(params, g, 0.05);
  // rows of other users must be untouched
  CHECK(next.at("user_emb").row(0)[0] == params.at("user_emb").row(0)[0]);
  CHECK(next.at("user_emb").row(3)[1] == params.at("user_emb").row(3)[1]);
  CHECK(next.at("dense_0_W") == params.at("dense_0_W"));
  CHECK(next.at("user_emb").row(1)[0] != params.at("user_emb").row(1)[0]);
}

TEST_CASE("apply_adam first step and hand-stepped trace") {
  ParamSet theta;
  theta.add_group("w", Matrix(1, 1, 0.5));

  SECTION("zero gradient is a fixed point with zero moments") {
    SparseGrad zero;
    double s[1] = {0.0};
    zero.accumulate({"w", kWholeGroup}, s);
    auto [next, state] = apply_adam(theta, zero, 0.1, AdamState{});
    CHECK(next == theta);
    CHECK(state.m.at("w").data[0] == 0.0);
    CHECK(state.v.at("w").data[0] == 0.0);
  }

  SECTION("bias-corrected first step has magnitude ~ alpha") {
    const double g = 0.37;
    SparseGrad grad;
    double s[1] = {g};
    grad.accumulate({"w", kWholeGroup}, s);
    auto [next, state] = apply_adam(theta, grad, 0.01, AdamState{});
    double expected = 0.01 * g / (std::sqrt(g * g) + 1e-8);
    CHECK(next.at("w").data[0] == Catch::Approx(0.5 - expected).epsilon(1e-12));
  }

  SECTION("two steps on a constant gradient match a hand trace") {
    const double g = -0.8, alpha = 0.05;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    SparseGrad grad;
    double s[1] = {g};
    grad.accumulate({"w", kWholeGroup}, s);

    auto [p1, st1] = apply_adam(theta, grad, alpha, AdamState{});
    auto [p2, st2] = apply_adam(p1, grad, alpha, std::move(st1));

    double m = 0.0, v = 0.0, w = 0.5;
    for (int t = 1; t <= 2; ++t) {
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      double mhat = m / (1 - std::pow(b1, t));
      double vhat = v / (1 - std::pow(b2, t));
      w -= alpha * mhat / (std::sqrt(vhat) + eps);
    }
    CHECK(p2.at("w").data[0] == Catch::Approx(w).epsilon(1e-14));
    CHECK(p2.at("w").data[0] > p1.at("w").data[0]);  // moving against the negative gradient
  }
}

TEST_CASE("training is deterministic and keeps parameters finite") {
  std::mt19937 gen(31);
  auto arch = small_arch(Backbone::BiInteractionFM, 6, 8, 3, {4});
  auto [model, params] = build_model(arch, 17);
  auto records = random_records(gen, 40, 6, 8, LossKind::SquaredError);

  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.epochs = 3;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.seed = 99;

  TrainResult a = train(model, params, records, cfg, LossKind::SquaredError);
  TrainResult b = train(model, params, records, cfg, LossKind::SquaredError);
  CHECK(a.params == b.params);
  CHECK(a.params.all_finite());
  REQUIRE(a.snapshots.size() == 3);
  CHECK(a.snapshots.back() == a.params);
  // loss should not blow up over training
  CHECK(a.epoch_loss.back() < a.epoch_loss.front() + 1.0);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.batch_size = 2;
  cfg.epochs = 1;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("sparse grad algebra") {
  SparseGrad a, b;
  double s1[2] = {1.0, 2.0};
  double s2[2] = {10.0, 20.0};
  double s3[1] = {5.0};
  a.accumulate({"x", 0}, s1);
  b.accumulate({"x", 0}, s2);
  b.accumulate({"y", kWholeGroup}, s3);

  SparseGrad sum = a;
  sum.add(b);
  CHECK(sum.slice({"x", 0})[1] == 22.0);
  CHECK(sum.slice({"y", kWholeGroup})[0] == 5.0);
  CHECK(sum.support_size() == 2);

  CHECK(a.dot(b) == 1.0 * 10.0 + 2.0 * 20.0);  // disjoint key y contributes nothing
  CHECK(a.dot(SparseGrad{}) == 0.0);
}
