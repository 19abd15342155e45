#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "driftreplay/arch.hpp"
#include "driftreplay/param_set.hpp"
#include "driftreplay/rec_model.hpp"
#include "driftreplay/record.hpp"
#include "driftreplay/sparse_grad.hpp"

namespace driftreplay::testing {

/// Minimal model concept instance: prediction is a single bias value.
/// Handy for examples whose algebra is solvable by hand.
struct BiasModel {
  ParamSet zero_params() const {
    ParamSet p;
    p.add_group("bias", Matrix(1, 1, 0.0));
    return p;
  }
  ParamSet params_at(double b) const {
    ParamSet p = zero_params();
    p.at("bias").data[0] = b;
    return p;
  }
  double forward(const ParamSet& params, const InteractionRecord&) const {
    return params.at("bias").data[0];
  }
  SparseGrad per_sample_grad(const ParamSet& params, const InteractionRecord& rec,
                             LossKind kind, ParamSelection = ParamSelection::Full) const {
    double g = loss_grad(forward(params, rec), rec.target(kind), kind);
    SparseGrad grad;
    double slice[1] = {g};
    grad.accumulate({"bias", kWholeGroup}, slice);
    return grad;
  }
};

/// Linear model without bias: prediction = w . phi(z), where phi is a
/// fixed per-record feature looked up by user_id. Gradients are exactly
/// (pred - y) * phi(z), which makes update algebra solvable by hand.
struct LinearNoBiasModel {
  std::vector<std::vector<double>> features;  // indexed by user_id

  ParamSet zero_params() const {
    ParamSet p;
    p.add_group("w", Matrix(1, features.front().size(), 0.0));
    return p;
  }
  double forward(const ParamSet& params, const InteractionRecord& rec) const {
    const auto& phi = features.at(static_cast<std::size_t>(rec.user_id));
    const Matrix& w = params.at("w");
    double out = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) out += w.data[i] * phi[i];
    return out;
  }
  SparseGrad per_sample_grad(const ParamSet& params, const InteractionRecord& rec,
                             LossKind kind, ParamSelection = ParamSelection::Full) const {
    double g = loss_grad(forward(params, rec), rec.target(kind), kind);
    const auto& phi = features.at(static_cast<std::size_t>(rec.user_id));
    std::vector<double> slice(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) slice[i] = g * phi[i];
    SparseGrad grad;
    grad.accumulate({"w", kWholeGroup}, slice);
    return grad;
  }
};

inline InteractionRecord rec(std::int64_t u, std::int64_t i, double rating,
                             std::int64_t ts = 0, int label = InteractionRecord::kNoLabel) {
  InteractionRecord r;
  r.user_id = u;
  r.item_id = i;
  r.rating = rating;
  r.label = label;
  r.timestamp = ts;
  return r;
}

/// Dense view of a sparse gradient, shaped like `shape` with zeros off
/// the support.
inline ParamSet densify(const SparseGrad& grad, const ParamSet& shape) {
  ParamSet dense;
  for (const auto& [name, m] : shape.groups()) dense.add_group(name, Matrix(m.rows, m.cols, 0.0));
  grad.axpy_into(dense, 1.0);
  return dense;
}

struct FdProbe {
  ParamSet central;  // central finite differences
  ParamSet asym;     // |forward - backward| one-sided gap, large at ReLU kinks
};

/// Finite differences of the per-sample loss over every parameter entry.
/// Independent of the backprop path. The asymmetry between the one-sided
/// stencils flags entries whose stencil straddles a ReLU kink, where the
/// subgradient convention and a central difference legitimately disagree.
template <class Model>
FdProbe fd_per_sample_grad(const Model& model, const ParamSet& params,
                           const InteractionRecord& r, LossKind kind, double h) {
  FdProbe probe;
  for (const auto& [name, m] : params.groups()) {
    probe.central.add_group(name, Matrix(m.rows, m.cols, 0.0));
    probe.asym.add_group(name, Matrix(m.rows, m.cols, 0.0));
  }
  ParamSet work = params;
  const double f0 = loss_value(model.forward(work, r), r.target(kind), kind);
  for (auto& [name, m] : work.groups()) {
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      double saved = m.data[i];
      m.data[i] = saved + h;
      double up = loss_value(model.forward(work, r), r.target(kind), kind);
      m.data[i] = saved - h;
      double down = loss_value(model.forward(work, r), r.target(kind), kind);
      m.data[i] = saved;
      probe.central.at(name).data[i] = (up - down) / (2.0 * h);
      double fwd = (up - f0) / h;
      double bwd = (f0 - down) / h;
      probe.asym.at(name).data[i] = std::abs(fwd - bwd);
    }
  }
  return probe;
}

inline bool close_rel(double a, double b, double rel, double floor = 1e-8) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), floor});
}

inline ArchDescriptor small_arch(Backbone bb, std::size_t users, std::size_t items,
                                 std::size_t d, std::vector<std::size_t> hidden,
                                 LossKind head = LossKind::SquaredError) {
  ArchDescriptor a;
  a.backbone = bb;
  a.num_users = users;
  a.num_items = items;
  a.embedding_dim = d;
  a.hidden = std::move(hidden);
  a.cross_depth = 2;
  a.head = head;
  return a;
}

inline std::vector<InteractionRecord> random_records(std::mt19937& gen, std::size_t n,
                                                     std::size_t users, std::size_t items,
                                                     LossKind kind) {
  std::uniform_int_distribution<std::int64_t> du(0, static_cast<std::int64_t>(users) - 1);
  std::uniform_int_distribution<std::int64_t> di(0, static_cast<std::int64_t>(items) - 1);
  std::uniform_real_distribution<double> dr(1.0, 5.0);
  std::bernoulli_distribution db(0.5);
  std::vector<InteractionRecord> out;
  for (std::size_t t = 0; t < n; ++t) {
    InteractionRecord r;
    r.user_id = du(gen);
    r.item_id = di(gen);
    r.timestamp = static_cast<std::int64_t>(t);
    if (kind == LossKind::Logistic) {
      r.label = db(gen) ? 1 : 0;
      r.rating = r.label == 1 ? 5.0 : 1.0;
    } else {
      r.rating = dr(gen);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace driftreplay::testing
