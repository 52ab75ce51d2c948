// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "lhsynth/hlstm/corpus.hpp"
#include "lhsynth/latlab/hysteresis.hpp"
#include "lhsynth/synthflow/checkpoint.hpp"
#include "lhsynth/synthflow/config.hpp"
#include "lhsynth/synthflow/report.hpp"

namespace lhsynth::synthflow {

// Partially connected starting point: scaled uniform init, then exactly
// ceil((1 - seed_sparsity) * size) random active entries per masked layer.
hlstm::LMModel make_seed(const FlowConfig& cfg, std::size_t vocab, numkit::SeededRng& rng);

// Corpus streams for a config.
struct FlowData {
  hlstm::Vocabulary vocab;
  hlstm::BatchStream train;
  hlstm::BatchStream valid;
  hlstm::BatchStream test;
};
FlowData load_flow_data(const FlowConfig& cfg);

double validation_perplexity(const hlstm::LMModel& model, const hlstm::BatchStream& valid, const FlowConfig& cfg);

// Whole-model forward latency. Virtual mode evaluates the configured curve:
// steps * sum over cells of 4 * (L(d_h) + L(d_s)) at the active dims
// (4 * L(d_s) at depth 0). Real mode times the compacted model's unrolled
// forward at (latency_batch, latency_steps).
latlab::SampleStats model_latency(const FlowConfig& cfg, hlstm::LMModel& model);

// Profile for LHP lookup: the config curve on the virtual clock, the native
// kernels in real mode. Throws MeasurementError on an incomplete sweep.
latlab::LatencyProfile sweep_profile(const FlowConfig& cfg);

struct FlowOptions {
  std::string out_dir;
  std::optional<latlab::LatencyProfile> profile;  // required unless cpu_mode
  bool resume = false;                            // continue from out_dir/checkpoint.bin
  std::size_t stop_after_units = 0;               // 0 = run to completion
  std::function<void(const std::string&)> log;
  // Called after every phase transition with the phase just finished.
  std::function<void(const std::string&, hlstm::LMModel&)> on_phase;
};

std::string checkpoint_path(const std::string& out_dir);

// Runs baseline, seed, wg, (rcp, rcg unless cpu_mode), wp. Writes the
// report, checkpoints and mask snapshots under out_dir. A runtime failure in
// a phase yields a report flagged incomplete with the error recorded; the
// last unit checkpoint stays on disk.
FlowReport run_flow(const FlowConfig& cfg, const FlowOptions& options);

}  // namespace lhsynth::synthflow
