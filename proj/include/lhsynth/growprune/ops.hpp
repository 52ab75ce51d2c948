// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "lhsynth/numkit/masked_linear.hpp"
#include "lhsynth/numkit/matrix.hpp"

namespace lhsynth::growprune {

using numkit::Mask;
using numkit::MaskedLinear;
using numkit::Matrix;

struct GrowPruneConfig {
  double g_w = 0.1;
  double p_w = 0.7;
  double p_r = 0.2;
  double p_c = 0.2;
  double g_r = 0.0;
  double g_c = 0.0;
  double accuracy_threshold = std::numeric_limits<double>::infinity();  // perplexity bound
  double halving_floor = 0.02;
  std::size_t retrain_patience = 2;

  // Throws ConfigError naming the first offending field.
  void validate() const;
  friend bool operator==(const GrowPruneConfig&, const GrowPruneConfig&) = default;
};

// Row and column indices that carry at least one active mask entry.
struct ActiveSets {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;

  static ActiveSets of(const Mask& mask);
  friend bool operator==(const ActiveSets&, const ActiveSets&) = default;
};

// Activates the dormant entries among the top ceil(g_w * M * N) entries of
// |G| over the whole matrix. New weights start at lr * G.
std::size_t weight_grow(MaskedLinear& layer, const Matrix& grad, double g_w, double lr);

struct WeightPruneResult {
  std::size_t pruned = 0;
  double threshold = 0.0;  // largest pruned |W|, 0 when nothing was pruned
};

// Deactivates the ceil(p_w * n_active) active entries of smallest |W|.
WeightPruneResult weight_prune(MaskedLinear& layer, double p_w);

struct DeadNeurons {
  std::size_t layer = 0;
  std::vector<std::size_t> rows;  // outputs with no active input
  std::vector<std::size_t> cols;  // inputs feeding no active output
};

// One entry per layer that has at least one dead row or column.
std::vector<DeadNeurons> neuron_sweep(const std::vector<const MaskedLinear*>& layers);

struct RcResult {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::size_t row_shortfall = 0;
  std::size_t col_shortfall = 0;
};

// Row and column importances are sums of |W|. The ceil(p_r * |active rows|)
// least important active rows and ceil(p_c * |active cols|) columns are
// pruned; both sets come from the unmodified W. Pruning every active row or
// column is refused.
RcResult rc_prune(MaskedLinear& layer, double p_r, double p_c);

// Dormant rows are ranked by the sum of |G| over active columns, dormant
// columns by the sum over active rows. The top ceil(g_r * M) rows are
// activated over the active columns and ceil(g_c * N) columns over the
// active rows, initialised to lr * G. Requests beyond the available dormant
// rows or columns are reported as shortfall.
RcResult rc_grow(MaskedLinear& layer, const Matrix& grad, const ActiveSets& active, double g_r,
                 double g_c, double lr);

// Ratio schedule after a retraining round.
enum class PruneMode { kRatio, kSingle, kStop };

struct HalvingOutcome {
  bool violated = false;
  PruneMode mode = PruneMode::kRatio;
};

// On violation (metric > threshold): halves p_r and p_c in ratio mode and
// drops to single row/column mode once both fall below halving_floor; a
// violation in single mode stops. Without violation nothing changes.
HalvingOutcome halve_on_violation(GrowPruneConfig& cfg, PruneMode mode, double achieved_metric);

const char* prune_mode_name(PruneMode mode);

}  // namespace lhsynth::growprune
