// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lhsynth/growprune/ops.hpp"
#include "lhsynth/hlstm/model.hpp"

namespace lhsynth::growprune {

// Structural axes of one recurrent cell.
//   kHidden: gate hidden unit j = row j of every H and column j of every O.
//   kState:  state unit u = row u of every O, column d_x + u of every gate
//            input layer, and column u of the consumer (next cell or head).
//   kInput:  input column c of every gate input layer.
enum class Axis { kHidden, kState, kInput };

// One contiguous slice of a masked layer that belongs to a structural unit.
struct UnitSlice {
  numkit::MaskedLinear* layer = nullptr;
  std::size_t layer_index = 0;  // position in LMModel::masked_layers()
  bool is_row = true;
  std::size_t index = 0;
};

// Every slice that makes up unit `unit` on `axis` of cell `cell`.
std::vector<UnitSlice> unit_slices(hlstm::LMModel& model, std::size_t cell, Axis axis, std::size_t unit);

std::size_t axis_size(const hlstm::LMModel& model, std::size_t cell, Axis axis);

// A unit is active when any of its slices holds an active mask entry.
std::vector<std::size_t> active_units(hlstm::LMModel& model, std::size_t cell, Axis axis);

// Summed |W ⊗ Msk| over a unit's slices.
double unit_importance(hlstm::LMModel& model, std::size_t cell, Axis axis, std::size_t unit);

struct CellDimsActive {
  std::size_t d_s = 0;
  std::size_t d_h = 0;
  std::size_t d_x = 0;
  friend bool operator==(const CellDimsActive&, const CellDimsActive&) = default;
};

CellDimsActive active_dims(hlstm::LMModel& model, std::size_t cell);

struct CoordinatedResult {
  std::vector<std::size_t> hidden;
  std::vector<std::size_t> state;
  std::vector<std::size_t> input;
  std::size_t shortfall = 0;
  CellDimsActive dims;  // after the operation
};

// Coordinated row/column pruning of one cell. p_r applies to hidden and
// state units, p_c to input columns; counts are ceil(ratio * active units).
// In single mode exactly one unit per axis with a nonzero ratio is pruned.
// Pruning every active unit of an axis is refused.
CoordinatedResult coordinated_prune(hlstm::LMModel& model, std::size_t cell, double p_r, double p_c,
                                    bool single = false);

// Explicit-count form used by single mode and tests.
CoordinatedResult coordinated_prune_counts(hlstm::LMModel& model, std::size_t cell,
                                           std::size_t n_hidden, std::size_t n_state,
                                           std::size_t n_input);

// Coordinated row/column growth. Dormant units are ranked by summed |G|
// over their slices restricted to the currently active partner units, and
// activated on exactly that region with W = lr * G. Units grown together do
// not connect to each other in this step. `grads` follows
// LMModel::masked_layers() order. Counts are ceil(ratio * axis size).
CoordinatedResult coordinated_grow(hlstm::LMModel& model, std::size_t cell,
                                   const std::vector<numkit::Matrix>& grads, double g_r, double g_c,
                                   double lr);

CoordinatedResult coordinated_grow_counts(hlstm::LMModel& model, std::size_t cell,
                                          const std::vector<numkit::Matrix>& grads, std::size_t n_hidden,
                                          std::size_t n_state, std::size_t n_input, double lr);

}  // namespace lhsynth::growprune
