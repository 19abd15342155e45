#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftreplay/arch.hpp"
#include "driftreplay/init.hpp"
#include "driftreplay/loss.hpp"
#include "driftreplay/mlp.hpp"
#include "driftreplay/param_set.hpp"
#include "driftreplay/record.hpp"
#include "driftreplay/sparse_grad.hpp"

namespace driftreplay {

/// One DCN cross layer: x0 * (w . x) + b + x, elementwise in x0.
inline std::vector<double> cross_layer(std::span<const double> x0, std::span<const double> x,
                                       std::span<const double> w, std::span<const double> b) {
  if (x0.size() != x.size() || x.size() != w.size() || w.size() != b.size())
    fail(ErrorKind::ShapeMismatch, "cross_layer vectors must share one dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x0[i] * s + b[i] + x[i];
  return out;
}

/// NFM bi-interaction pooling: 0.5 * [(sum v)^2 - sum v^2], elementwise.
inline std::vector<double> bi_interaction(std::span<const std::vector<double>> embs) {
  if (embs.size() < 2)
    fail(ErrorKind::ShapeMismatch, "bi_interaction needs at least 2 vectors");
  const std::size_t dim = embs[0].size();
  for (const auto& v : embs)
    if (v.size() != dim) fail(ErrorKind::ShapeMismatch, "bi_interaction vectors must share one dimension");
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  for (const auto& v : embs)
    for (std::size_t i = 0; i < dim; ++i) {
      sum[i] += v[i];
      sq[i] += v[i] * v[i];
    }
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = 0.5 * (sum[i] * sum[i] - sq[i]);
  return out;
}

/// Input of the final fully connected layer, as produced by forward().
struct FeatureVector {
  std::vector<double> values;
};

/// Shared-embedding recommendation model covering the three backbones.
/// Stateless apart from the architecture; all parameters live in the
/// ParamSet, so scoring many records in parallel only shares reads.
class RecModel {
 public:
  explicit RecModel(ArchDescriptor arch) : arch_(std::move(arch)) {
    validate(arch_);
    x0_dim_ = 2 * arch_.embedding_dim;
    mlp_input_dim_ = arch_.backbone == Backbone::BiInteractionFM ? arch_.embedding_dim : x0_dim_;
    deep_out_dim_ = arch_.hidden.empty() ? mlp_input_dim_ : arch_.hidden.back();
    final_fan_in_ = arch_.backbone == Backbone::CrossNet ? x0_dim_ + deep_out_dim_ : deep_out_dim_;
  }

  const ArchDescriptor& arch() const { return arch_; }
  std::size_t final_fan_in() const { return final_fan_in_; }

  std::vector<GroupSpec> group_specs() const {
    const std::size_t d = arch_.embedding_dim;
    const std::size_t joint = arch_.num_users + arch_.num_items;
    std::vector<GroupSpec> specs;
    specs.push_back({"user_emb", arch_.num_users, d, GroupKind::UserTable});
    specs.push_back({"item_emb", arch_.num_items, d, GroupKind::ItemTable});
    switch (arch_.backbone) {
      case Backbone::WideDeep:
        specs.push_back({"wide_w", joint, 1, GroupKind::JointTable});
        specs.push_back({"wide_b", 1, 1, GroupKind::Dense});
        break;
      case Backbone::CrossNet:
        for (std::size_t k = 0; k < arch_.cross_depth; ++k) {
          specs.push_back({cross_name(k, 'w'), x0_dim_, 1, GroupKind::Dense});
          specs.push_back({cross_name(k, 'b'), x0_dim_, 1, GroupKind::Dense});
        }
        break;
      case Backbone::BiInteractionFM:
        specs.push_back({"lin_w", joint, 1, GroupKind::JointTable});
        specs.push_back({"lin_b", 1, 1, GroupKind::Dense});
        break;
    }
    std::size_t in = mlp_input_dim_;
    for (std::size_t k = 0; k < arch_.hidden.size(); ++k) {
      specs.push_back({dense_name(k, 'W'), arch_.hidden[k], in, GroupKind::Dense});
      specs.push_back({dense_name(k, 'b'), arch_.hidden[k], 1, GroupKind::Dense});
      in = arch_.hidden[k];
    }
    specs.push_back({"dense_last_W", 1, final_fan_in_, GroupKind::Dense});
    specs.push_back({"dense_last_b", 1, 1, GroupKind::Dense});
    return specs;
  }

  /// Seeded parameter allocation: weights uniform(-1/sqrt(fan_in), ..),
  /// biases zero. Group draw order is the group_specs order, so equal
  /// seeds give bit-identical parameter sets.
  ParamSet init_params(std::uint32_t seed) const {
    std::mt19937 gen(seed);
    ParamSet params;
    for (const GroupSpec& spec : group_specs()) {
      Matrix m(spec.rows, spec.cols, 0.0);
      if (is_bias(spec.name)) {
        // biases start at zero
      } else if (spec.name == "user_emb" || spec.name == "item_emb") {
        init_uniform(m, gen, arch_.embedding_dim);
      } else if (spec.name == "wide_w" || spec.name == "lin_w") {
        init_uniform(m, gen, 1);
      } else if (spec.name.starts_with("cross_")) {
        init_uniform(m, gen, x0_dim_);
      } else {  // dense W: fan_in is the input width
        init_uniform(m, gen, spec.cols);
      }
      params.add_group(spec.name, std::move(m));
    }
    return params;
  }

  static std::pair<RecModel, ParamSet> build(const ArchDescriptor& arch, std::uint32_t seed) {
    RecModel model(arch);
    ParamSet params = model.init_params(seed);
    return {std::move(model), std::move(params)};
  }

  double forward(const ParamSet& params, const InteractionRecord& rec) const {
    Trace trace;
    return forward_impl(params, rec, trace);
  }

  std::vector<double> extract_feature(const ParamSet& params, const InteractionRecord& rec) const {
    Trace trace;
    forward_impl(params, rec, trace);
    return std::move(trace.final_input);
  }

  /// Gradient of loss(forward(z), target) with respect to the parameters.
  /// Selected restricts the support to the record's embedding rows plus
  /// dense_last; deltas still propagate through every layer so those four
  /// slices match the Full computation exactly.
  SparseGrad per_sample_grad(const ParamSet& params, const InteractionRecord& rec,
                             LossKind kind, ParamSelection sel) const {
    Trace trace;
    double pred = forward_impl(params, rec, trace);
    double gscale = loss_grad(pred, rec.target(kind), kind);
    SparseGrad grad;
    backward(params, rec, trace, gscale, sel, grad);
    return grad;
  }

 private:
  struct Trace {
    std::vector<double> u_vec, i_vec;
    std::vector<std::vector<double>> mlp_acts;  // a_0 (input) .. a_H
    std::vector<std::vector<double>> cross_xs;  // x_0 .. x_depth
    std::vector<double> cross_s;                // s_k = w_k . x_k
    std::vector<double> final_input;            // what dense_last consumes
  };

  static std::string dense_name(std::size_t k, char part) {
    return detail::dense_name(k, part);
  }
  static std::string cross_name(std::size_t k, char part) {
    return "cross_" + std::to_string(k) + "_" + part;
  }
  static bool is_bias(const std::string& name) {
    return name.ends_with("_b") || name == "wide_b" || name == "lin_b";
  }

  void check_ids(const InteractionRecord& rec) const {
    if (rec.user_id < 0 || static_cast<std::size_t>(rec.user_id) >= arch_.num_users)
      fail(ErrorKind::IdOutOfRange, "user id " + std::to_string(rec.user_id));
    if (rec.item_id < 0 || static_cast<std::size_t>(rec.item_id) >= arch_.num_items)
      fail(ErrorKind::IdOutOfRange, "item id " + std::to_string(rec.item_id));
  }

  void run_hidden(const ParamSet& params, std::vector<double> input, Trace& trace) const {
    detail::mlp_hidden_forward(params, arch_.hidden, std::move(input), trace.mlp_acts);
  }

  double forward_impl(const ParamSet& params, const InteractionRecord& rec, Trace& trace) const {
    check_ids(rec);
    const std::size_t u = static_cast<std::size_t>(rec.user_id);
    const std::size_t i = static_cast<std::size_t>(rec.item_id);
    auto urow = params.at("user_emb").row(u);
    auto irow = params.at("item_emb").row(i);
    trace.u_vec.assign(urow.begin(), urow.end());
    trace.i_vec.assign(irow.begin(), irow.end());

    double extra = 0.0;
    switch (arch_.backbone) {
      case Backbone::WideDeep: {
        std::vector<double> x0 = concat(trace.u_vec, trace.i_vec);
        run_hidden(params, std::move(x0), trace);
        trace.final_input = trace.mlp_acts.back();
        const Matrix& wide = params.at("wide_w");
        extra = wide.data[u] + wide.data[arch_.num_users + i] + params.at("wide_b").data[0];
        break;
      }
      case Backbone::CrossNet: {
        std::vector<double> x0 = concat(trace.u_vec, trace.i_vec);
        trace.cross_xs.clear();
        trace.cross_s.clear();
        trace.cross_xs.push_back(x0);
        for (std::size_t k = 0; k < arch_.cross_depth; ++k) {
          const Matrix& w = params.at(cross_name(k, 'w'));
          const Matrix& b = params.at(cross_name(k, 'b'));
          const std::vector<double>& x = trace.cross_xs.back();
          double s = 0.0;
          for (std::size_t c = 0; c < x.size(); ++c) s += w.data[c] * x[c];
          trace.cross_s.push_back(s);
          std::vector<double> next(x.size());
          for (std::size_t c = 0; c < x.size(); ++c) next[c] = x0[c] * s + b.data[c] + x[c];
          trace.cross_xs.push_back(std::move(next));
        }
        run_hidden(params, std::move(x0), trace);
        trace.final_input = concat(trace.cross_xs.back(), trace.mlp_acts.back());
        break;
      }
      case Backbone::BiInteractionFM: {
        const std::vector<std::vector<double>> embs = {trace.u_vec, trace.i_vec};
        std::vector<double> pooled = bi_interaction(embs);
        run_hidden(params, std::move(pooled), trace);
        trace.final_input = trace.mlp_acts.back();
        const Matrix& lin = params.at("lin_w");
        extra = lin.data[u] + lin.data[arch_.num_users + i] + params.at("lin_b").data[0];
        break;
      }
    }

    return detail::dense_last_forward(params, trace.final_input) + extra;
  }

  // Backprop of gscale = dLoss/dPred through the traced forward pass.
  void backward(const ParamSet& params, const InteractionRecord& rec, const Trace& trace,
                double gscale, ParamSelection sel, SparseGrad& grad) const {
    const bool full = sel == ParamSelection::Full;
    const std::size_t u = static_cast<std::size_t>(rec.user_id);
    const std::size_t i = static_cast<std::size_t>(rec.item_id);
    const std::size_t d = arch_.embedding_dim;

    // dense_last is always part of the support.
    std::vector<double> d_final = detail::dense_last_backward(params, trace.final_input, gscale, grad);

    std::vector<double> du(d, 0.0), di(d, 0.0);

    switch (arch_.backbone) {
      case Backbone::WideDeep: {
        std::vector<double> dx0 = backprop_hidden(params, trace, d_final, full, grad);
        split_x0(dx0, du, di);
        if (full) {
          double one[1] = {gscale};
          grad.accumulate({"wide_w", static_cast<std::int64_t>(u)}, one);
          grad.accumulate({"wide_w", static_cast<std::int64_t>(arch_.num_users + i)}, one);
          grad.accumulate({"wide_b", kWholeGroup}, one);
        }
        break;
      }
      case Backbone::CrossNet: {
        const std::size_t n = x0_dim_;
        std::vector<double> d_cross(d_final.begin(), d_final.begin() + n);
        std::vector<double> d_deep(d_final.begin() + n, d_final.end());
        const std::vector<double>& x0 = trace.cross_xs.front();
        std::vector<double> dx0(n, 0.0);
        std::vector<double> dx = std::move(d_cross);  // d/dx_{k+1}, walking down
        for (std::size_t k = arch_.cross_depth; k-- > 0;) {
          const Matrix& w = params.at(cross_name(k, 'w'));
          const std::vector<double>& xk = trace.cross_xs[k];
          const double s = trace.cross_s[k];
          if (full) grad.accumulate({cross_name(k, 'b'), kWholeGroup}, dx);
          double ds = 0.0;
          for (std::size_t c = 0; c < n; ++c) ds += dx[c] * x0[c];
          if (full) {
            std::vector<double> dw(n);
            for (std::size_t c = 0; c < n; ++c) dw[c] = ds * xk[c];
            grad.accumulate({cross_name(k, 'w'), kWholeGroup}, dw);
          }
          for (std::size_t c = 0; c < n; ++c) {
            dx0[c] += s * dx[c];
            dx[c] = dx[c] + ds * w.data[c];
          }
        }
        for (std::size_t c = 0; c < n; ++c) dx0[c] += dx[c];  // x_0 is x0 itself
        std::vector<double> dx0_deep = backprop_hidden(params, trace, d_deep, full, grad);
        for (std::size_t c = 0; c < n; ++c) dx0[c] += dx0_deep[c];
        split_x0(dx0, du, di);
        break;
      }
      case Backbone::BiInteractionFM: {
        std::vector<double> d_pooled = backprop_hidden(params, trace, d_final, full, grad);
        for (std::size_t c = 0; c < d; ++c) {
          du[c] = d_pooled[c] * trace.i_vec[c];
          di[c] = d_pooled[c] * trace.u_vec[c];
        }
        if (full) {
          double one[1] = {gscale};
          grad.accumulate({"lin_w", static_cast<std::int64_t>(u)}, one);
          grad.accumulate({"lin_w", static_cast<std::int64_t>(arch_.num_users + i)}, one);
          grad.accumulate({"lin_b", kWholeGroup}, one);
        }
        break;
      }
    }

    grad.accumulate({"user_emb", static_cast<std::int64_t>(u)}, du);
    grad.accumulate({"item_emb", static_cast<std::int64_t>(i)}, di);
  }

  std::vector<double> backprop_hidden(const ParamSet& params, const Trace& trace,
                                      std::vector<double> d_out, bool accumulate,
                                      SparseGrad& grad) const {
    return detail::mlp_hidden_backward(params, arch_.hidden, trace.mlp_acts, std::move(d_out),
                                       accumulate, grad);
  }

  void split_x0(const std::vector<double>& dx0, std::vector<double>& du,
                std::vector<double>& di) const {
    const std::size_t d = arch_.embedding_dim;
    for (std::size_t c = 0; c < d; ++c) {
      du[c] += dx0[c];
      di[c] += dx0[d + c];
    }
  }

  static std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }

  ArchDescriptor arch_;
  std::size_t x0_dim_ = 0;
  std::size_t mlp_input_dim_ = 0;
  std::size_t deep_out_dim_ = 0;
  std::size_t final_fan_in_ = 0;
};

/// build_model per the architecture descriptor; deterministic in the seed.
inline std::pair<RecModel, ParamSet> build_model(const ArchDescriptor& arch, std::uint32_t seed) {
  return RecModel::build(arch, seed);
}

}  // namespace driftreplay
