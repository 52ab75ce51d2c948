// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lhsynth/hlstm/cell.hpp"

namespace lhsynth::hlstm {

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embed = 0;   // d_x of the first cell
  std::size_t state = 0;   // d_s
  std::size_t hidden = 0;  // d_h
  int hidden_depth = 1;
  std::size_t layers = 1;  // stacked cells

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Character-level language model: embedding -> stacked H-LSTM cells -> head.
struct LMModel {
  Matrix embedding;       // [V x d_x]
  Matrix grad_embedding;  // [V x d_x]
  std::vector<HLSTMCellParams> cells;
  MaskedLinear head;      // [V x d_s]
  double dropout_h = 0.0;

  LMModel() = default;
  LMModel(const ModelDims& dims, numkit::ActivationKind hidden_activation = numkit::ActivationKind::kRelu);

  ModelDims dims() const;
  std::size_t vocab() const { return embedding.rows(); }

  // Every masked layer (cells then head) with a stable name.
  std::vector<MaskedLinear*> masked_layers();
  std::vector<std::string> masked_layer_names() const;
  std::vector<MaskedLinear*> cell_layers();
  std::vector<const MaskedLinear*> cell_layers() const;

  std::vector<HLSTMState> zero_state(std::size_t batch) const;
  void zero_grad();
  void apply_masks();

  friend bool operator==(const LMModel& a, const LMModel& b) {
    return a.embedding == b.embedding && a.cells == b.cells && a.head == b.head &&
           a.dropout_h == b.dropout_h;
  }
};

// Scaled uniform fan-in initialisation: U(-1/sqrt(in), 1/sqrt(in)) for every
// masked layer, U(-0.1, 0.1) for the embedding, zero biases.
void init_uniform(LMModel& model, numkit::SeededRng& rng);

// Time-major token block: tokens[t * batch + b].
struct TokenBlock {
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::vector<std::uint32_t> tokens;

  std::uint32_t at(std::size_t t, std::size_t b) const { return tokens[t * batch + b]; }
};

struct Unroll {
  std::vector<Matrix> logits;                  // per step, [batch x V]
  std::vector<std::vector<StepCache>> caches;  // [step][cell]
  std::vector<Matrix> head_inputs;             // top-cell h per step
  std::vector<HLSTMState> final_state;
  TokenBlock inputs;
};

// Embedding lookup, stacked cells and head for every step. The returned
// final_state continues the sequence in the next block.
Unroll unroll_forward(const LMModel& model, const TokenBlock& inputs,
                      const std::vector<HLSTMState>& init, bool train, numkit::SeededRng& rng);

// Summed negative log-likelihood of `targets` under the unrolled logits.
// Accumulates gradients of that sum into every layer and the embedding.
// The initial state is treated as a constant.
double bptt(LMModel& model, Unroll& unroll, const TokenBlock& targets);

// Summed NLL only, no gradients.
double sequence_nll(const Unroll& unroll, const TokenBlock& targets);

double perplexity(double mean_nll);

// Physically removes dead structure: gate hidden units with no live path,
// state units that are never produced or never consumed, and input columns
// no gate reads. Evaluation-mode outputs equal those of the masked model when
// started from a zero state.
LMModel compact(const LMModel& model);

struct ParamCount {
  std::size_t total = 0;
  std::size_t active = 0;
};

// Recurrent-cell parameters: weights plus biases. Active counts mask entries
// plus biases of live rows.
ParamCount cell_param_count(const LMModel& model);
// Embedding and head, counted the same way (the embedding is dense).
ParamCount io_param_count(const LMModel& model);
ParamCount layer_param_count(const MaskedLinear& layer);

}  // namespace lhsynth::hlstm
