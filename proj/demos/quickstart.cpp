// Builds a tiny WideDeep model, trains it on a handful of interactions,
// and prints per-epoch losses. A minimal tour of the core types.
#include <cstdio>
#include <vector>

#include "driftreplay/rec_model.hpp"
#include "driftreplay/train.hpp"

int main() {
  using namespace driftreplay;

  ArchDescriptor arch;
  arch.backbone = Backbone::WideDeep;
  arch.embedding_dim = 4;
  arch.hidden = {8};
  arch.num_users = 4;
  arch.num_items = 5;

  auto [model, params] = build_model(arch, 1);

  std::vector<InteractionRecord> data;
  for (int t = 0; t < 40; ++t) {
    InteractionRecord r;
    r.user_id = t % 4;
    r.item_id = (t * 3) % 5;
    r.rating = 1.0 + (r.user_id + r.item_id) % 5;
    r.timestamp = t;
    data.push_back(r);
  }

  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.epochs = 5;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.seed = 7;

  TrainResult result = train(model, params, data, cfg, LossKind::SquaredError);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    std::printf("epoch %zu  train loss %.6f\n", e + 1, result.epoch_loss[e]);
  return 0;
}
