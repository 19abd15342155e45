#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "driftreplay/error.hpp"
#include "driftreplay/loss.hpp"

namespace driftreplay {

enum class Backbone { WideDeep, CrossNet, BiInteractionFM };

inline const char* to_string(Backbone b) {
  switch (b) {
    case Backbone::WideDeep: return "wdl";
    case Backbone::CrossNet: return "dcn";
    case Backbone::BiInteractionFM: return "nfm";
  }
  return "?";
}

/// Static description of a recommendation backbone. Every variant ends in
/// one linear output layer (dense_last), which is the boundary used both
/// for gradient selection and for iCaRL feature extraction.
struct ArchDescriptor {
  Backbone backbone = Backbone::WideDeep;
  std::size_t embedding_dim = 64;
  std::vector<std::size_t> hidden = {64, 32};
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t cross_depth = 2;  // CrossNet only
  LossKind head = LossKind::SquaredError;
};

inline void validate(const ArchDescriptor& a) {
  if (a.num_users == 0 || a.num_items == 0)
    fail(ErrorKind::InvalidArch, "need at least one user and one item");
  if (a.embedding_dim == 0) fail(ErrorKind::InvalidArch, "embedding_dim must be >= 1");
  if (a.backbone == Backbone::CrossNet && a.cross_depth == 0)
    fail(ErrorKind::InvalidArch, "cross_depth must be >= 1");
  for (std::size_t h : a.hidden)
    if (h == 0) fail(ErrorKind::InvalidArch, "hidden layer width must be >= 1");
}

}  // namespace driftreplay
