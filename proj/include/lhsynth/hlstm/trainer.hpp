// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "lhsynth/hlstm/corpus.hpp"
#include "lhsynth/hlstm/model.hpp"

namespace lhsynth::hlstm {

struct TrainConfig {
  std::size_t batch = 32;
  std::size_t bptt = 32;
  std::size_t eval_batch = 16;
  double lr = 1.0;
  double lr_decay = 0.1;          // multiplier on a validation plateau
  std::size_t plateau_patience = 1;
  double min_lr = 1e-4;
  double weight_decay = 0.0;
  double clip_norm = 0.25;        // global gradient norm; 0 disables
  double dropout = 0.0;
  // Bridging gradients average the last N batches of an epoch; 0 = all.
  std::size_t bridging_batches = 0;
};

// Learning-rate schedule state carried across epochs (and checkpoints).
struct OptimizerState {
  double lr = 1.0;
  double best_metric = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// Epoch-averaged loss gradients for every masked layer (order of
// LMModel::masked_layers()), dormant entries included.
struct BridgingGradients {
  std::vector<Matrix> layers;
  std::size_t batches = 0;
};

struct EpochResult {
  double mean_nll = 0.0;
  std::size_t windows = 0;
  BridgingGradients bridging;  // empty unless requested
};

// One pass over the training stream. Gradients are scaled to per-token means
// and clipped by global norm before the SGD step. Bridging gradients are
// recorded before clipping.
EpochResult train_epoch(LMModel& model, const BatchStream& train, const TrainConfig& cfg,
                        const OptimizerState& opt, numkit::SeededRng& rng, bool collect_bridging);

// Mean per-token NLL over a stream, no dropout, state carried across windows.
double evaluate_nll(const LMModel& model, const BatchStream& stream, std::size_t window);

// Plateau schedule: decays lr when `metric` fails to improve on the best
// seen for `plateau_patience` consecutive calls.
void observe_validation(OptimizerState& opt, const TrainConfig& cfg, double metric);

// Plain SGD on the (unmasked) embedding; clears its gradient.
void embedding_step(LMModel& model, double lr, double weight_decay);

}  // namespace lhsynth::hlstm
