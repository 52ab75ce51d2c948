// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "lhsynth/hlstm/model.hpp"
#include "lhsynth/numkit/mask.hpp"

namespace lhsynth::growprune {

// Binary portable bitmap (P4). Active entries are drawn black.
void write_pbm(const numkit::Mask& mask, const std::string& path);
numkit::Mask read_pbm(const std::string& path);

struct MaskSnapshot {
  std::string phase;
  std::string layer;
  std::string file;  // relative to the snapshot directory
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t active = 0;
};

// Writes one bitmap per masked layer into `dir` as <phase>_<layer>.pbm.
std::vector<MaskSnapshot> export_masks(hlstm::LMModel& model, const std::string& dir, const std::string& phase);

// JSON manifest listing every snapshot.
void write_mask_manifest(const std::vector<MaskSnapshot>& snaps, const std::string& path);

}  // namespace lhsynth::growprune
