// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lhsynth/growprune/ops.hpp"
#include "lhsynth/hlstm/model.hpp"
#include "lhsynth/hlstm/trainer.hpp"
#include "lhsynth/latlab/profile.hpp"
#include "lhsynth/numkit/rng.hpp"
#include "lhsynth/synthflow/report.hpp"

namespace lhsynth::synthflow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Phases advance strictly in this order; rcp and rcg are skipped in cpu mode.
enum class Phase : std::uint8_t { kBaseline, kSeed, kWg, kRcp, kRcg, kWp, kDone };
const char* phase_name(Phase phase);

struct FlowState {
  Phase phase = Phase::kBaseline;
  std::size_t phase_step = 0;  // units finished inside the current phase
  std::size_t units_done = 0;
  bool phase_started = false;  // rcp/wp start check done

  double metric = 0.0;  // validation perplexity of `model`
  std::vector<double> metric_history;

  double p_r = 0.0;
  double p_c = 0.0;
  double p_w = 0.0;
  growprune::PruneMode mode = growprune::PruneMode::kRatio;

  hlstm::LMModel model;
  hlstm::OptimizerState opt;
  numkit::SeededRng rng;
  std::string vocab;
  std::optional<latlab::LatencyProfile> profile;
  FlowReport report;

  friend bool operator==(const FlowState& a, const FlowState& b);
};

// Container: 8-byte magic, u32 version, u64 payload size, payload, u64
// FNV-1a checksum of the payload. All integers little-endian.
std::string wrap_container(std::string_view payload);
// Throws IntegrityError on a damaged file and VersionError on a version
// mismatch (both versions named).
std::string unwrap_container(std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes);

std::string encode_checkpoint(const FlowState& state, const std::string& config_json);
FlowState decode_checkpoint(std::string_view bytes, std::string* config_json = nullptr);

// Written through a temporary file and renamed into place.
void save_checkpoint(const FlowState& state, const std::string& config_json, const std::string& path);
FlowState load_checkpoint(const std::string& path, std::string* config_json = nullptr);

}  // namespace lhsynth::synthflow
