// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lhsynth/numkit/activation.hpp"
#include "lhsynth/numkit/masked_linear.hpp"
#include "lhsynth/numkit/matrix.hpp"
#include "lhsynth/numkit/rng.hpp"

namespace lhsynth::hlstm {

using numkit::Matrix;
using numkit::MaskedLinear;

// Control gates in storage order: forget, input, output, update.
enum class Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kUpdate = 3 };
inline constexpr std::size_t kNumGates = 4;
inline constexpr std::array<char, kNumGates> kGateNames{'f', 'i', 'o', 'g'};

struct CellDims {
  std::size_t input = 0;   // d_x
  std::size_t state = 0;   // d_s
  std::size_t hidden = 0;  // d_h, unused when hidden_depth == 0
  int hidden_depth = 1;    // 0: one affine map per gate, 1: one hidden layer

  std::size_t concat() const { return input + state; }
  friend bool operator==(const CellDims&, const CellDims&) = default;
};

// One gate network: optional hidden layer H ([d_h x (d_x + d_s)]) followed by
// the output layer O ([d_s x d_h], or [d_s x (d_x + d_s)] at depth 0).
struct GateParams {
  MaskedLinear hidden;
  MaskedLinear output;
};

class HLSTMCellParams {
 public:
  HLSTMCellParams() = default;
  explicit HLSTMCellParams(CellDims dims,
                           numkit::ActivationKind hidden_activation = numkit::ActivationKind::kRelu);

  const CellDims& dims() const { return dims_; }
  numkit::ActivationKind hidden_activation() const { return hidden_activation_; }

  GateParams& gate(Gate g) { return gates_[static_cast<std::size_t>(g)]; }
  const GateParams& gate(Gate g) const { return gates_[static_cast<std::size_t>(g)]; }
  GateParams& gate(std::size_t g) { return gates_[g]; }
  const GateParams& gate(std::size_t g) const { return gates_[g]; }

  // The masked layers in a fixed order (f.H, f.O, i.H, i.O, ...). Depth-0
  // cells list only the output layers.
  std::vector<MaskedLinear*> layers();
  std::vector<const MaskedLinear*> layers() const;
  std::vector<std::string> layer_names(const std::string& prefix) const;

  friend bool operator==(const HLSTMCellParams& a, const HLSTMCellParams& b) {
    if (!(a.dims_ == b.dims_) || a.hidden_activation_ != b.hidden_activation_) return false;
    for (std::size_t g = 0; g < kNumGates; ++g) {
      if (!(a.gates_[g].hidden == b.gates_[g].hidden) || !(a.gates_[g].output == b.gates_[g].output))
        return false;
    }
    return true;
  }

 private:
  CellDims dims_;
  numkit::ActivationKind hidden_activation_ = numkit::ActivationKind::kRelu;
  std::array<GateParams, kNumGates> gates_;
};

// Batch-major recurrent state: h and c are [batch x d_s].
struct HLSTMState {
  Matrix h;
  Matrix c;

  static HLSTMState zeros(std::size_t batch, std::size_t state_width) {
    return {Matrix(batch, state_width), Matrix(batch, state_width)};
  }
};

struct GateCache {
  Matrix hidden_pre;   // H pre-activation
  Matrix hidden_out;   // after activation and dropout; input of O
  Matrix dropout;      // multiplicative dropout factors, empty when inactive
  Matrix value;        // gate output after sigmoid / tanh
};

// Intermediates of one cell step. Consumed exactly once by cell_backward.
struct StepCache {
  Matrix z;  // [x_t, h_{t-1}]
  std::array<GateCache, kNumGates> gates;
  Matrix c_prev;
  Matrix tanh_c;
  bool consumed = false;
};

struct CellGrads {
  Matrix dx;
  HLSTMState dprev;
};

// One step of the cell:
//   z = [x_t, h_{t-1}]
//   f, i, o = sigmoid(O(act(H(z)))),  g = tanh(O_g(act(H_g(z))))
//   c_t = f ⊗ c_{t-1} + i ⊗ g,  h_t = o ⊗ tanh(c_t)
// Dropout with ratio `dropout` is applied to the H outputs when train is set.
HLSTMState cell_forward(const HLSTMCellParams& params, const Matrix& x, const HLSTMState& prev,
                        bool train, double dropout, numkit::SeededRng& rng, StepCache& cache);

// Reverse of cell_forward. Accumulates gradients of all gate layers and
// returns gradients for x_t and the previous state.
CellGrads cell_backward(HLSTMCellParams& params, StepCache& cache, const Matrix& dh,
                        const Matrix& dc);

}  // namespace lhsynth::hlstm
