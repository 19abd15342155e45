#pragma once

#include <span>
#include <string>
#include <vector>

#include "driftreplay/param_set.hpp"
#include "driftreplay/sparse_grad.hpp"

namespace driftreplay::detail {

inline std::string dense_name(std::size_t k, char part) {
  return "dense_" + std::to_string(k) + "_" + part;
}

/// ReLU hidden stack dense_0 .. dense_{H-1}. acts[0] is the input, acts[k]
/// the post-activation of layer k-1; acts.back() feeds dense_last.
inline void mlp_hidden_forward(const ParamSet& params, std::span<const std::size_t> hidden,
                               std::vector<double> input,
                               std::vector<std::vector<double>>& acts) {
  acts.clear();
  acts.push_back(std::move(input));
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    const Matrix& W = params.at(dense_name(k, 'W'));
    const Matrix& b = params.at(dense_name(k, 'b'));
    const std::vector<double>& a = acts.back();
    if (W.cols != a.size()) fail(ErrorKind::ShapeMismatch, dense_name(k, 'W') + " input width");
    std::vector<double> next(W.rows);
    for (std::size_t r = 0; r < W.rows; ++r) {
      double z = b.data[r];
      const double* wr = W.data.data() + r * W.cols;
      for (std::size_t c = 0; c < W.cols; ++c) z += wr[c] * a[c];
      next[r] = z > 0.0 ? z : 0.0;
    }
    acts.push_back(std::move(next));
  }
}

/// Backprop through the hidden stack; returns the gradient at acts[0].
/// Weight/bias slices are accumulated only when `accumulate` is set.
inline std::vector<double> mlp_hidden_backward(const ParamSet& params,
                                               std::span<const std::size_t> hidden,
                                               const std::vector<std::vector<double>>& acts,
                                               std::vector<double> d_out, bool accumulate,
                                               SparseGrad& grad) {
  for (std::size_t k = hidden.size(); k-- > 0;) {
    const Matrix& W = params.at(dense_name(k, 'W'));
    const std::vector<double>& a_out = acts[k + 1];
    const std::vector<double>& a_in = acts[k];
    std::vector<double> dz(W.rows);
    for (std::size_t r = 0; r < W.rows; ++r) dz[r] = a_out[r] > 0.0 ? d_out[r] : 0.0;
    if (accumulate) {
      std::vector<double> dW(W.rows * W.cols);
      for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t c = 0; c < W.cols; ++c) dW[r * W.cols + c] = dz[r] * a_in[c];
      grad.accumulate({dense_name(k, 'W'), kWholeGroup}, dW);
      grad.accumulate({dense_name(k, 'b'), kWholeGroup}, dz);
    }
    std::vector<double> d_in(W.cols, 0.0);
    for (std::size_t r = 0; r < W.rows; ++r) {
      const double* wr = W.data.data() + r * W.cols;
      for (std::size_t c = 0; c < W.cols; ++c) d_in[c] += wr[c] * dz[r];
    }
    d_out = std::move(d_in);
  }
  return d_out;
}

/// dense_last forward: scalar linear head over the feature vector.
inline double dense_last_forward(const ParamSet& params, const std::vector<double>& feature) {
  const Matrix& Wl = params.at("dense_last_W");
  if (Wl.cols != feature.size()) fail(ErrorKind::ShapeMismatch, "dense_last_W input width");
  double out = params.at("dense_last_b").data[0];
  for (std::size_t c = 0; c < Wl.cols; ++c) out += Wl.data[c] * feature[c];
  return out;
}

/// dense_last backward: accumulates the head slices (always in-support)
/// and returns the gradient at the feature vector.
inline std::vector<double> dense_last_backward(const ParamSet& params,
                                               const std::vector<double>& feature,
                                               double gscale, SparseGrad& grad) {
  std::vector<double> dW(feature.size());
  for (std::size_t c = 0; c < dW.size(); ++c) dW[c] = gscale * feature[c];
  grad.accumulate({"dense_last_W", kWholeGroup}, dW);
  double db[1] = {gscale};
  grad.accumulate({"dense_last_b", kWholeGroup}, db);

  const Matrix& Wl = params.at("dense_last_W");
  std::vector<double> d_feature(feature.size());
  for (std::size_t c = 0; c < d_feature.size(); ++c) d_feature[c] = gscale * Wl.data[c];
  return d_feature;
}

}  // namespace driftreplay::detail
