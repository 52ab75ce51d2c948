// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/growprune/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lhsynth/common/error.hpp"
#include "lhsynth/numkit/percentile.hpp"

namespace lhsynth::growprune {

using numkit::Direction;
using numkit::ratio_count;
using numkit::select_extreme;

namespace {

void check_ratio(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

void check_grad_shape(const MaskedLinear& layer, const Matrix& grad, const char* op) {
  if (grad.rows() != layer.out_features() || grad.cols() != layer.in_features()) {
    throw ContractViolation(std::string(op) + ": gradient " + grad.shape_string() + " vs layer " +
                            layer.weight().shape_string());
  }
}

}  // namespace

void GrowPruneConfig::validate() const {
  check_ratio(g_w, "g_w");
  check_ratio(p_w, "p_w");
  check_ratio(p_r, "p_r");
  check_ratio(p_c, "p_c");
  check_ratio(g_r, "g_r");
  check_ratio(g_c, "g_c");
  check_ratio(halving_floor, "halving_floor");
  if (!(accuracy_threshold > 0.0)) throw ConfigError("accuracy_threshold must be positive");
}

ActiveSets ActiveSets::of(const Mask& mask) {
  ActiveSets s;
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    if (mask.row_any(r)) s.rows.push_back(r);
  }
  for (std::size_t c = 0; c < mask.cols(); ++c) {
    if (mask.col_any(c)) s.cols.push_back(c);
  }
  return s;
}

std::size_t weight_grow(MaskedLinear& layer, const Matrix& grad, double g_w, double lr) {
  check_ratio(g_w, "g_w");
  check_grad_shape(layer, grad, "weight_grow");
  std::vector<double> mag(grad.size());
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(grad.values()[k]);
  const auto top = select_extreme(mag, ratio_count(g_w, mag.size()), Direction::kLargest);

  auto& mask = layer.mask_mut();
  auto& w = layer.weight_mut();
  std::size_t grown = 0;
  for (std::size_t k : top) {
    if (mask.bytes()[k]) continue;
    mask.bytes()[k] = 1;
    w.values()[k] = lr * grad.values()[k];
    ++grown;
  }
  layer.apply_mask();
  return grown;
}

WeightPruneResult weight_prune(MaskedLinear& layer, double p_w) {
  check_ratio(p_w, "p_w");
  std::vector<std::size_t> idx;
  std::vector<double> mag;
  const auto bytes = layer.mask().bytes();
  for (std::size_t k = 0; k < bytes.size(); ++k) {
    if (bytes[k]) {
      idx.push_back(k);
      mag.push_back(std::abs(layer.weight().values()[k]));
    }
  }
  WeightPruneResult res;
  if (idx.empty()) return res;
  const auto pick = select_extreme(mag, ratio_count(p_w, idx.size()), Direction::kSmallest);
  auto& mask = layer.mask_mut();
  for (std::size_t j : pick) {
    mask.bytes()[idx[j]] = 0;
    res.threshold = std::max(res.threshold, mag[j]);
  }
  res.pruned = pick.size();
  layer.apply_mask();
  return res;
}

std::vector<DeadNeurons> neuron_sweep(const std::vector<const MaskedLinear*>& layers) {
  std::vector<DeadNeurons> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    DeadNeurons d;
    d.layer = i;
    const Mask& m = layers[i]->mask();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (!m.row_any(r)) d.rows.push_back(r);
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!m.col_any(c)) d.cols.push_back(c);
    }
    if (!d.rows.empty() || !d.cols.empty()) out.push_back(std::move(d));
  }
  return out;
}

RcResult rc_prune(MaskedLinear& layer, double p_r, double p_c) {
  check_ratio(p_r, "p_r");
  check_ratio(p_c, "p_c");
  const ActiveSets act = ActiveSets::of(layer.mask());
  const Matrix& w = layer.effective();

  std::vector<double> row_imp(act.rows.size(), 0.0), col_imp(act.cols.size(), 0.0);
  for (std::size_t i = 0; i < act.rows.size(); ++i) {
    for (double v : w.row(act.rows[i])) row_imp[i] += std::abs(v);
  }
  for (std::size_t j = 0; j < act.cols.size(); ++j) {
    for (std::size_t r = 0; r < w.rows(); ++r) col_imp[j] += std::abs(w(r, act.cols[j]));
  }
  const std::size_t n_rows = ratio_count(p_r, act.rows.size());
  const std::size_t n_cols = ratio_count(p_c, act.cols.size());
  if ((n_rows > 0 && n_rows == act.rows.size()) || (n_cols > 0 && n_cols == act.cols.size())) {
    throw ContractViolation("rc_prune: refusing to prune every active row or column of a " +
                            w.shape_string() + " layer");
  }

  RcResult res;
  for (std::size_t i : select_extreme(row_imp, n_rows, Direction::kSmallest)) res.rows.push_back(act.rows[i]);
  for (std::size_t j : select_extreme(col_imp, n_cols, Direction::kSmallest)) res.cols.push_back(act.cols[j]);
  std::sort(res.rows.begin(), res.rows.end());
  std::sort(res.cols.begin(), res.cols.end());
  auto& mask = layer.mask_mut();
  for (std::size_t r : res.rows) mask.set_row(r, false);
  for (std::size_t c : res.cols) mask.set_col(c, false);
  layer.apply_mask();
  return res;
}

RcResult rc_grow(MaskedLinear& layer, const Matrix& grad, const ActiveSets& active, double g_r,
                 double g_c, double lr) {
  check_ratio(g_r, "g_r");
  check_ratio(g_c, "g_c");
  check_grad_shape(layer, grad, "rc_grow");
  const std::size_t m = layer.out_features(), n = layer.in_features();
  std::vector<bool> row_on(m, false), col_on(n, false);
  for (std::size_t r : active.rows) row_on.at(r) = true;
  for (std::size_t c : active.cols) col_on.at(c) = true;

  std::vector<std::size_t> dormant_rows, dormant_cols;
  std::vector<double> row_score, col_score;
  for (std::size_t r = 0; r < m; ++r) {
    if (row_on[r]) continue;
    double s = 0.0;
    for (std::size_t c : active.cols) s += std::abs(grad(r, c));
    dormant_rows.push_back(r);
    row_score.push_back(s);
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (col_on[c]) continue;
    double s = 0.0;
    for (std::size_t r : active.rows) s += std::abs(grad(r, c));
    dormant_cols.push_back(c);
    col_score.push_back(s);
  }

  const std::size_t want_rows = ratio_count(g_r, m), want_cols = ratio_count(g_c, n);
  RcResult res;
  res.row_shortfall = want_rows > dormant_rows.size() ? want_rows - dormant_rows.size() : 0;
  res.col_shortfall = want_cols > dormant_cols.size() ? want_cols - dormant_cols.size() : 0;
  for (std::size_t i : select_extreme(row_score, std::min(want_rows, dormant_rows.size()), Direction::kLargest))
    res.rows.push_back(dormant_rows[i]);
  for (std::size_t j : select_extreme(col_score, std::min(want_cols, dormant_cols.size()), Direction::kLargest))
    res.cols.push_back(dormant_cols[j]);
  std::sort(res.rows.begin(), res.rows.end());
  std::sort(res.cols.begin(), res.cols.end());

  auto& mask = layer.mask_mut();
  auto& w = layer.weight_mut();
  for (std::size_t r : res.rows) {
    for (std::size_t c : active.cols) {
      mask.set(r, c, true);
      w(r, c) = lr * grad(r, c);
    }
  }
  for (std::size_t c : res.cols) {
    for (std::size_t r : active.rows) {
      mask.set(r, c, true);
      w(r, c) = lr * grad(r, c);
    }
  }
  layer.apply_mask();
  return res;
}

HalvingOutcome halve_on_violation(GrowPruneConfig& cfg, PruneMode mode, double achieved_metric) {
  if (!std::isfinite(achieved_metric)) throw ContractViolation("halve_on_violation: metric must be finite");
  HalvingOutcome out;
  out.mode = mode;
  if (achieved_metric <= cfg.accuracy_threshold || mode == PruneMode::kStop) return out;
  out.violated = true;
  if (mode == PruneMode::kSingle) {
    out.mode = PruneMode::kStop;
    return out;
  }
  cfg.p_r *= 0.5;
  cfg.p_c *= 0.5;
  if (std::max(cfg.p_r, cfg.p_c) < cfg.halving_floor) out.mode = PruneMode::kSingle;
  return out;
}

const char* prune_mode_name(PruneMode mode) {
  switch (mode) {
    case PruneMode::kRatio: return "ratio";
    case PruneMode::kSingle: return "single";
    case PruneMode::kStop: return "stop";
  }
  return "?";
}

}  // namespace lhsynth::growprune
