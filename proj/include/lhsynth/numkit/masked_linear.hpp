// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lhsynth/numkit/mask.hpp"
#include "lhsynth/numkit/matrix.hpp"

namespace lhsynth::numkit {

// Affine layer y = (W ⊗ Msk) x + b with a binary connectivity mask.
//
// Gradients are accumulated for every entry of W, dormant ones included:
// growth decisions rank dormant connections by the gradient they would
// receive. The mask only gates forward values and parameter updates.
//
// Batched calls are batch-major: inputs are [batch x in], outputs
// [batch x out].
class MaskedLinear {
 public:
  MaskedLinear() = default;
  MaskedLinear(std::size_t out, std::size_t in);

  std::size_t out_features() const { return weight_.rows(); }
  std::size_t in_features() const { return weight_.cols(); }

  const Matrix& weight() const { return weight_; }
  Matrix& weight_mut() {
    dirty_ = true;
    return weight_;
  }
  const Mask& mask() const { return mask_; }
  Mask& mask_mut() {
    dirty_ = true;
    return mask_;
  }
  const std::vector<double>& bias() const { return bias_; }
  std::vector<double>& bias_mut() { return bias_; }

  Matrix& grad_weight() { return grad_weight_; }
  const Matrix& grad_weight() const { return grad_weight_; }
  std::vector<double>& grad_bias() { return grad_bias_; }
  const std::vector<double>& grad_bias() const { return grad_bias_; }

  // Enforces Msk == 0 => W == 0 and zeroes biases of rows with no active
  // input (pruned neurons).
  void apply_mask();

  // A row is live when at least one of its mask entries is active.
  bool row_live(std::size_t r) const { return mask_.row_any(r); }

  // y = x (W ⊗ Msk)^T + b. y is resized to [batch x out].
  void forward(const Matrix& x, Matrix& y) const;

  // Accumulates grad_weight += dy^T x (unmasked) and grad_bias += colsum(dy).
  // When dx is non-null it receives dy (W ⊗ Msk).
  void backward(const Matrix& x, const Matrix& dy, Matrix* dx);

  void zero_grad();

  std::size_t active_weights() const { return mask_.count(); }

  // W ⊗ Msk, [out x in].
  const Matrix& effective() const;

  friend bool operator==(const MaskedLinear& a, const MaskedLinear& b) {
    return a.weight_ == b.weight_ && a.mask_ == b.mask_ && a.bias_ == b.bias_;
  }

 private:
  void refresh() const;

  Matrix weight_;
  Mask mask_;
  std::vector<double> bias_;
  Matrix grad_weight_;
  std::vector<double> grad_bias_;

  mutable bool dirty_ = true;
  mutable Matrix effective_;
  mutable Matrix effective_t_;
};

// Single-sample convenience forms.
std::vector<double> masked_affine_forward(const MaskedLinear& layer, std::span<const double> x);
std::vector<double> masked_affine_backward(MaskedLinear& layer, std::span<const double> x,
                                           std::span<const double> dy);

// Plain SGD with L2 decay on active entries; inactive entries stay at zero.
// Biases of live rows take the plain gradient step (no decay). All gradients
// are cleared.
// Throws NumericError naming `layer_name` if any gradient is non-finite.
void sgd_step(MaskedLinear& layer, double lr, double weight_decay, std::string_view layer_name);

}  // namespace lhsynth::numkit
