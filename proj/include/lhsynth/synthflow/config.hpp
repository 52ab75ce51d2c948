// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "lhsynth/growprune/ops.hpp"
#include "lhsynth/hlstm/trainer.hpp"
#include "lhsynth/latlab/backend.hpp"
#include "lhsynth/latlab/hysteresis.hpp"
#include "lhsynth/numkit/activation.hpp"

namespace lhsynth::synthflow {

inline constexpr int kConfigSchemaVersion = 1;

enum class BaselineKind { kDenseHlstm, kLstm };
enum class LatencyMode { kVirtual, kReal };

struct FlowConfig {
  std::uint64_t seed = 1;

  std::string corpus;           // resolved against the config file directory
  std::size_t corpus_limit = 0; // bytes; 0 = whole file
  double train_frac = 0.9;
  double valid_frac = 0.05;

  std::size_t embed = 32;       // d_x
  std::size_t state = 128;      // d_s
  std::size_t hidden = 128;     // d_h
  int hidden_depth = 1;
  std::size_t layers = 1;
  numkit::ActivationKind activation = numkit::ActivationKind::kRelu;

  double seed_sparsity = 0.5;
  hlstm::TrainConfig train;
  growprune::GrowPruneConfig growprune;
  std::optional<double> accuracy_threshold;  // default: baseline validation perplexity
  double grow_lr = 0.1;                      // grown weights start at grow_lr * G

  BaselineKind baseline_kind = BaselineKind::kDenseHlstm;
  std::size_t baseline_epochs = 6;

  std::size_t wg_epochs = 4;         // epochs that end with a growth step
  std::size_t wg_settle_epochs = 1;  // plain epochs after the last growth
  std::size_t rcp_max_iters = 8;
  std::size_t rcg_retrain_epochs = 2;
  std::size_t wp_max_iters = 6;
  bool cpu_mode = false;

  LatencyMode latency_mode = LatencyMode::kVirtual;
  latlab::SyntheticCurveSpec curve;  // virtual model latency and virtual sweeps
  std::size_t latency_batch = 16;
  std::size_t latency_steps = 64;
  latlab::MeasureConfig latency_measure{3, 15};

  std::string sweep_grid = "1:128:1";  // used by --sweep
  std::size_t sweep_batch = 16;
  latlab::MeasureConfig sweep_measure{2, 9};
  latlab::LhpRule lhp_rule = latlab::LhpRule::kPrefixMin;

  bool mask_snapshots = true;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

FlowConfig config_from_json(const std::string& text, const std::string& base_dir = ".");
FlowConfig load_config(const std::string& path);
// Canonical JSON (all keys, schema_version included).
std::string config_to_json(const FlowConfig& cfg);

const char* baseline_kind_name(BaselineKind k);
const char* latency_mode_name(LatencyMode m);

}  // namespace lhsynth::synthflow
