#pragma once

#include <cmath>

#include "driftreplay/error.hpp"

namespace driftreplay {

enum class LossKind {
  SquaredError,  // rating regression, per-sample (pred - y)^2 / 2
  Logistic,      // binary classification on the pre-sigmoid logit
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline void check_logistic_target(double target) {
  if (target != 0.0 && target != 1.0)
    fail(ErrorKind::InvalidTarget, "logistic target must be 0 or 1, got " + std::to_string(target));
}

/// Per-sample loss. Logistic uses the softplus form, stable for any logit.
inline double loss_value(double pred, double target, LossKind kind) {
  switch (kind) {
    case LossKind::SquaredError: {
      double d = pred - target;
      return 0.5 * d * d;
    }
    case LossKind::Logistic: {
      check_logistic_target(target);
      // max(p,0) - p*y + log(1 + exp(-|p|))
      return std::max(pred, 0.0) - pred * target + std::log1p(std::exp(-std::abs(pred)));
    }
  }
  fail(ErrorKind::InvalidConfig, "unknown loss kind");
}

/// dLoss/dPrediction.
inline double loss_grad(double pred, double target, LossKind kind) {
  switch (kind) {
    case LossKind::SquaredError:
      return pred - target;
    case LossKind::Logistic:
      check_logistic_target(target);
      return sigmoid(pred) - target;
  }
  fail(ErrorKind::InvalidConfig, "unknown loss kind");
}

}  // namespace driftreplay
