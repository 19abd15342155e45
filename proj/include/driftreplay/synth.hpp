#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/record.hpp"

namespace driftreplay {

/// Latent-factor drift world. Ratings are a clipped affine image of the
/// user-item latent dot product plus noise. User latents rotate and shift
/// at each phase boundary, so early and late blocks carry different
/// preference structure; users are active in bursty windows, so any one
/// block only covers part of the population.
struct SynthConfig {
  std::size_t num_users = 300;
  std::size_t num_items = 500;
  std::size_t num_records = 30000;
  std::size_t latent_dim = 8;
  std::size_t phases = 3;
  double drift = 1.0;          // rotation angle (radians) + shift scale per phase
  double noise = 0.3;          // rating noise stddev
  double activity_min = 0.4;   // user active-window width, fraction of the timeline
  double activity_max = 0.9;
  double gain = 1.4;           // rating = clip(3 + gain * <u,q>/sqrt(k) + noise)
};

inline void validate(const SynthConfig& cfg) {
  if (cfg.num_users == 0 || cfg.num_items == 0 || cfg.num_records == 0)
    fail(ErrorKind::InvalidConfig, "synth sizes must be positive");
  if (cfg.latent_dim == 0 || cfg.phases == 0)
    fail(ErrorKind::InvalidConfig, "latent_dim and phases must be positive");
  if (!(cfg.activity_min > 0.0 && cfg.activity_min <= cfg.activity_max && cfg.activity_max <= 1.0))
    fail(ErrorKind::InvalidConfig, "activity window bounds must satisfy 0 < min <= max <= 1");
}

inline std::vector<InteractionRecord> synth_drift(const SynthConfig& cfg, std::uint32_t seed) {
  validate(cfg);
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t k = cfg.latent_dim;
  auto draw_latents = [&](std::size_t n) {
    std::vector<std::vector<double>> m(n, std::vector<double>(k));
    for (auto& row : m)
      for (double& x : row) x = normal(gen);
    return m;
  };

  std::vector<std::vector<double>> items = draw_latents(cfg.num_items);
  std::vector<std::vector<std::vector<double>>> users_by_phase;
  users_by_phase.push_back(draw_latents(cfg.num_users));
  for (std::size_t p = 1; p < cfg.phases; ++p) {
    // rotate the previous phase's latents in a coordinate plane, then
    // shift with fresh noise scaled by the drift magnitude
    const std::size_t a = p % k;
    const std::size_t b = (p + 1) % k;
    const double angle = cfg.drift;
    const double ca = std::cos(angle), sa = std::sin(angle);
    auto next = users_by_phase.back();
    for (auto& row : next) {
      if (a != b) {
        double ra = ca * row[a] - sa * row[b];
        double rb = sa * row[a] + ca * row[b];
        row[a] = ra;
        row[b] = rb;
      }
      for (double& x : row) x += 0.3 * cfg.drift * normal(gen);
    }
    users_by_phase.push_back(std::move(next));
  }

  // bursty user presence: active inside [start, start + width) mod 1
  std::vector<double> win_start(cfg.num_users), win_width(cfg.num_users);
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    win_start[u] = unit(gen);
    win_width[u] = cfg.activity_min + (cfg.activity_max - cfg.activity_min) * unit(gen);
  }
  auto active = [&](std::size_t u, double tau) {
    double offset = tau - win_start[u];
    if (offset < 0.0) offset += 1.0;
    return offset < win_width[u];
  };

  std::uniform_int_distribution<std::size_t> pick_user(0, cfg.num_users - 1);
  std::uniform_int_distribution<std::size_t> pick_item(0, cfg.num_items - 1);
  const double scale = cfg.gain / std::sqrt(static_cast<double>(k));

  std::vector<InteractionRecord> records;
  records.reserve(cfg.num_records);
  for (std::size_t t = 0; t < cfg.num_records; ++t) {
    const double tau = (static_cast<double>(t) + 0.5) / static_cast<double>(cfg.num_records);
    const std::size_t phase =
        std::min(static_cast<std::size_t>(tau * static_cast<double>(cfg.phases)), cfg.phases - 1);

    std::size_t u = pick_user(gen);
    for (int attempt = 0; attempt < 64 && !active(u, tau); ++attempt) u = pick_user(gen);
    const std::size_t i = pick_item(gen);

    double dot = 0.0;
    const auto& uvec = users_by_phase[phase][u];
    const auto& ivec = items[i];
    for (std::size_t c = 0; c < k; ++c) dot += uvec[c] * ivec[c];
    double rating = 3.0 + scale * dot + cfg.noise * normal(gen);
    rating = std::clamp(rating, 1.0, 5.0);

    InteractionRecord rec;
    rec.user_id = static_cast<std::int64_t>(u);
    rec.item_id = static_cast<std::int64_t>(i);
    rec.rating = rating;
    rec.timestamp = static_cast<std::int64_t>(t);  // strictly increasing
    records.push_back(rec);
  }
  return records;
}

}  // namespace driftreplay
