// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/growprune/coordinated.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lhsynth/common/error.hpp"
#include "lhsynth/numkit/percentile.hpp"

namespace lhsynth::growprune {

using hlstm::kNumGates;
using hlstm::LMModel;
using numkit::Direction;
using numkit::ratio_count;

namespace {

struct LayerRef {
  MaskedLinear* layer;
  std::size_t index;
};

// Gate layers of `cell` plus its consumer layers, all with their index in
// masked_layers() order.
struct CellLayout {
  std::vector<LayerRef> hidden;  // H per gate, empty at depth 0
  std::vector<LayerRef> output;  // O per gate
  std::vector<LayerRef> input;   // layers reading z = [x, h]
  std::vector<LayerRef> consumers;
  std::size_t d_x = 0, d_s = 0, d_h = 0;
  bool deep = true;
};

CellLayout layout(LMModel& model, std::size_t cell) {
  if (cell >= model.cells.size()) throw ContractViolation("cell index out of range");
  const auto all = model.masked_layers();
  std::map<const MaskedLinear*, std::size_t> pos;
  for (std::size_t i = 0; i < all.size(); ++i) pos[all[i]] = i;

  CellLayout l;
  auto& c = model.cells[cell];
  l.d_x = c.dims().input;
  l.d_s = c.dims().state;
  l.d_h = c.dims().hidden;
  l.deep = c.dims().hidden_depth == 1;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    auto& gp = c.gate(g);
    if (l.deep) l.hidden.push_back({&gp.hidden, pos.at(&gp.hidden)});
    l.output.push_back({&gp.output, pos.at(&gp.output)});
  }
  l.input = l.deep ? l.hidden : l.output;
  if (cell + 1 < model.cells.size()) {
    auto& next = model.cells[cell + 1];
    for (std::size_t g = 0; g < kNumGates; ++g) {
      auto& gp = next.gate(g);
      MaskedLinear* in = next.dims().hidden_depth == 1 ? &gp.hidden : &gp.output;
      l.consumers.push_back({in, pos.at(in)});
    }
  } else {
    l.consumers.push_back({&model.head, pos.at(&model.head)});
  }
  return l;
}

double slice_abs_sum(const UnitSlice& s) {
  const Matrix& w = s.layer->effective();
  double acc = 0.0;
  if (s.is_row) {
    for (double v : w.row(s.index)) acc += std::abs(v);
  } else {
    for (std::size_t r = 0; r < w.rows(); ++r) acc += std::abs(w(r, s.index));
  }
  return acc;
}

bool slice_active(const UnitSlice& s) {
  return s.is_row ? s.layer->mask().row_any(s.index) : s.layer->mask().col_any(s.index);
}

void clear_slice(const UnitSlice& s) {
  if (s.is_row) {
    s.layer->mask_mut().set_row(s.index, false);
  } else {
    s.layer->mask_mut().set_col(s.index, false);
  }
}

void reapply(LMModel& model) {
  for (MaskedLinear* l : model.masked_layers()) l->apply_mask();
}

std::vector<std::size_t> pick_prune(LMModel& model, std::size_t cell, Axis axis, std::size_t count) {
  if (count == 0) return {};
  const auto act = active_units(model, cell, axis);
  if (count >= act.size()) {
    throw ContractViolation("coordinated_prune: refusing to prune every active unit of an axis (" +
                            std::to_string(act.size()) + " active)");
  }
  std::vector<double> imp;
  for (std::size_t u : act) imp.push_back(unit_importance(model, cell, axis, u));
  std::vector<std::size_t> out;
  for (std::size_t i : numkit::select_extreme(imp, count, Direction::kSmallest)) out.push_back(act[i]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::size_t axis_size(const LMModel& model, std::size_t cell, Axis axis) {
  const auto& d = model.cells.at(cell).dims();
  switch (axis) {
    case Axis::kHidden: return d.hidden_depth == 1 ? d.hidden : 0;
    case Axis::kState: return d.state;
    case Axis::kInput: return d.input;
  }
  return 0;
}

std::vector<UnitSlice> unit_slices(LMModel& model, std::size_t cell, Axis axis, std::size_t unit) {
  const CellLayout l = layout(model, cell);
  if (unit >= axis_size(model, cell, axis)) throw ContractViolation("unit index out of range");
  std::vector<UnitSlice> out;
  switch (axis) {
    case Axis::kHidden:
      for (const auto& h : l.hidden) out.push_back({h.layer, h.index, true, unit});
      for (const auto& o : l.output) out.push_back({o.layer, o.index, false, unit});
      break;
    case Axis::kState:
      for (const auto& o : l.output) out.push_back({o.layer, o.index, true, unit});
      for (const auto& in : l.input) out.push_back({in.layer, in.index, false, l.d_x + unit});
      for (const auto& c : l.consumers) out.push_back({c.layer, c.index, false, unit});
      break;
    case Axis::kInput:
      for (const auto& in : l.input) out.push_back({in.layer, in.index, false, unit});
      break;
  }
  return out;
}

std::vector<std::size_t> active_units(LMModel& model, std::size_t cell, Axis axis) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < axis_size(model, cell, axis); ++u) {
    const auto slices = unit_slices(model, cell, axis, u);
    if (std::any_of(slices.begin(), slices.end(), slice_active)) out.push_back(u);
  }
  return out;
}

double unit_importance(LMModel& model, std::size_t cell, Axis axis, std::size_t unit) {
  double acc = 0.0;
  for (const auto& s : unit_slices(model, cell, axis, unit)) acc += slice_abs_sum(s);
  return acc;
}

CellDimsActive active_dims(LMModel& model, std::size_t cell) {
  return {active_units(model, cell, Axis::kState).size(), active_units(model, cell, Axis::kHidden).size(),
          active_units(model, cell, Axis::kInput).size()};
}

CoordinatedResult coordinated_prune_counts(LMModel& model, std::size_t cell, std::size_t n_hidden,
                                           std::size_t n_state, std::size_t n_input) {
  CoordinatedResult res;
  // All three selections read the unmodified weights.
  res.hidden = pick_prune(model, cell, Axis::kHidden, n_hidden);
  res.state = pick_prune(model, cell, Axis::kState, n_state);
  res.input = pick_prune(model, cell, Axis::kInput, n_input);
  for (std::size_t u : res.hidden) {
    for (const auto& s : unit_slices(model, cell, Axis::kHidden, u)) clear_slice(s);
  }
  for (std::size_t u : res.state) {
    for (const auto& s : unit_slices(model, cell, Axis::kState, u)) clear_slice(s);
  }
  for (std::size_t u : res.input) {
    for (const auto& s : unit_slices(model, cell, Axis::kInput, u)) clear_slice(s);
  }
  reapply(model);
  res.dims = active_dims(model, cell);
  return res;
}

CoordinatedResult coordinated_prune(LMModel& model, std::size_t cell, double p_r, double p_c, bool single) {
  if (!(p_r >= 0.0 && p_r <= 1.0) || !(p_c >= 0.0 && p_c <= 1.0)) {
    throw ConfigError("coordinated_prune: ratios must lie in [0, 1]");
  }
  const std::size_t ah = active_units(model, cell, Axis::kHidden).size();
  const std::size_t as = active_units(model, cell, Axis::kState).size();
  const std::size_t ax = active_units(model, cell, Axis::kInput).size();
  if (single) {
    return coordinated_prune_counts(model, cell, p_r > 0.0 && ah > 0 ? 1 : 0, p_r > 0.0 ? 1 : 0,
                                    p_c > 0.0 ? 1 : 0);
  }
  return coordinated_prune_counts(model, cell, ratio_count(p_r, ah), ratio_count(p_r, as),
                                  ratio_count(p_c, ax));
}

CoordinatedResult coordinated_grow_counts(LMModel& model, std::size_t cell, const std::vector<Matrix>& grads,
                                          std::size_t n_hidden, std::size_t n_state, std::size_t n_input,
                                          double lr) {
  const auto layers = model.masked_layers();
  if (grads.size() != layers.size()) throw ContractViolation("coordinated_grow: one gradient per masked layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads[i].rows() != layers[i]->out_features() || grads[i].cols() != layers[i]->in_features()) {
      throw ContractViolation("coordinated_grow: gradient shape mismatch for layer " + std::to_string(i));
    }
  }
  // Partner sets are frozen before any activation.
  std::vector<ActiveSets> before;
  for (MaskedLinear* l : layers) before.push_back(ActiveSets::of(l->mask()));

  auto partners = [&](const UnitSlice& s) -> const std::vector<std::size_t>& {
    return s.is_row ? before[s.layer_index].cols : before[s.layer_index].rows;
  };
  auto grad_at = [&](const UnitSlice& s, std::size_t p) {
    const Matrix& g = grads[s.layer_index];
    return s.is_row ? g(s.index, p) : g(p, s.index);
  };

  struct Plan {
    Axis axis;
    std::vector<std::size_t> chosen;
  };
  std::vector<Plan> plans;
  CoordinatedResult res;
  const std::pair<Axis, std::size_t> wants[] = {
      {Axis::kHidden, n_hidden}, {Axis::kState, n_state}, {Axis::kInput, n_input}};
  for (const auto& [axis, want] : wants) {
    const auto act = active_units(model, cell, axis);
    std::vector<std::size_t> dormant;
    std::vector<double> score;
    std::size_t next = 0;
    for (std::size_t u = 0; u < axis_size(model, cell, axis); ++u) {
      if (next < act.size() && act[next] == u) {
        ++next;
        continue;
      }
      double sc = 0.0;
      for (const auto& s : unit_slices(model, cell, axis, u)) {
        for (std::size_t p : partners(s)) sc += std::abs(grad_at(s, p));
      }
      dormant.push_back(u);
      score.push_back(sc);
    }
    const std::size_t take = std::min(want, dormant.size());
    res.shortfall += want - take;
    Plan plan{axis, {}};
    for (std::size_t i : numkit::select_extreme(score, take, Direction::kLargest)) plan.chosen.push_back(dormant[i]);
    std::sort(plan.chosen.begin(), plan.chosen.end());
    plans.push_back(std::move(plan));
  }

  for (const auto& plan : plans) {
    for (std::size_t u : plan.chosen) {
      for (const auto& s : unit_slices(model, cell, plan.axis, u)) {
        auto& mask = s.layer->mask_mut();
        auto& w = s.layer->weight_mut();
        for (std::size_t p : partners(s)) {
          const std::size_t r = s.is_row ? s.index : p;
          const std::size_t c = s.is_row ? p : s.index;
          mask.set(r, c, true);
          w(r, c) = lr * grad_at(s, p);
        }
      }
    }
  }
  res.hidden = plans[0].chosen;
  res.state = plans[1].chosen;
  res.input = plans[2].chosen;
  reapply(model);
  res.dims = active_dims(model, cell);
  return res;
}

CoordinatedResult coordinated_grow(LMModel& model, std::size_t cell, const std::vector<Matrix>& grads,
                                   double g_r, double g_c, double lr) {
  if (!(g_r >= 0.0 && g_r <= 1.0) || !(g_c >= 0.0 && g_c <= 1.0)) {
    throw ConfigError("coordinated_grow: ratios must lie in [0, 1]");
  }
  return coordinated_grow_counts(model, cell, grads, ratio_count(g_r, axis_size(model, cell, Axis::kHidden)),
                                 ratio_count(g_r, axis_size(model, cell, Axis::kState)),
                                 ratio_count(g_c, axis_size(model, cell, Axis::kInput)), lr);
}

}  // namespace lhsynth::growprune
