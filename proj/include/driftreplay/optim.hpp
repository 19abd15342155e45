#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "driftreplay/param_set.hpp"
#include "driftreplay/sparse_grad.hpp"

namespace driftreplay {

enum class OptimizerKind { MBGD, Adam };

/// theta' = theta - alpha * grad on the support; untouched entries are
/// bit-identical to the input.
inline ParamSet apply_mbgd(ParamSet params, const SparseGrad& grad, double alpha) {
  grad.axpy_into(params, -alpha);
  return params;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, shaped like the parameters they
/// track. `step` is the global update count used for bias correction;
/// sparse updates leave untouched moments stale (lazy Adam).
struct AdamState {
  ParamSet m;
  ParamSet v;
  std::int64_t step = 0;

  bool fresh() const { return step == 0 && m.group_count() == 0; }

  static AdamState like(const ParamSet& params) {
    AdamState s;
    for (const auto& [name, mat] : params.groups()) {
      s.m.add_group(name, Matrix(mat.rows, mat.cols, 0.0));
      s.v.add_group(name, Matrix(mat.rows, mat.cols, 0.0));
    }
    return s;
  }
};

inline std::pair<ParamSet, AdamState> apply_adam(ParamSet params, const SparseGrad& grad,
                                                 double alpha, AdamState state,
                                                 const AdamConfig& cfg = {}) {
  if (state.fresh()) state = AdamState::like(params);
  if (!state.m.same_shape(params))
    fail(ErrorKind::ShapeMismatch, "adam state does not match parameters");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (const auto& [key, g] : grad.entries()) {
    Matrix& pm = params.at(key.group);
    Matrix& mm = state.m.at(key.group);
    Matrix& vm = state.v.at(key.group);
    std::size_t offset = 0, len = 0;
    if (key.row == kWholeGroup) {
      len = pm.size();
    } else {
      offset = static_cast<std::size_t>(key.row) * pm.cols;
      len = pm.cols;
      if (static_cast<std::size_t>(key.row) >= pm.rows)
        fail(ErrorKind::IdOutOfRange, "adam row " + to_string(key));
    }
    if (g.size() != len) fail(ErrorKind::ShapeMismatch, "adam slice for " + to_string(key));
    for (std::size_t i = 0; i < len; ++i) {
      double& m = mm.data[offset + i];
      double& v = vm.data[offset + i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[i];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[i] * g[i];
      double mhat = m / bc1;
      double vhat = v / bc2;
      pm.data[offset + i] -= alpha * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  return {std::move(params), std::move(state)};
}

}  // namespace driftreplay
