// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/numkit/masked_linear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lhsynth/common/error.hpp"
#include "lhsynth/numkit/kernels.hpp"

namespace lhsynth::numkit {

MaskedLinear::MaskedLinear(std::size_t out, std::size_t in)
    : weight_(out, in),
      mask_(out, in, true),
      bias_(out, 0.0),
      grad_weight_(out, in),
      grad_bias_(out, 0.0) {}

void MaskedLinear::apply_mask() {
  kernels().mask_apply(weight_.data(), mask_.bytes().data(), weight_.data(), weight_.size());
  for (std::size_t r = 0; r < out_features(); ++r) {
    if (!mask_.row_any(r)) bias_[r] = 0.0;
  }
  dirty_ = true;
}

void MaskedLinear::refresh() const {
  if (!dirty_) return;
  effective_.resize(weight_.rows(), weight_.cols());
  kernels().mask_apply(weight_.data(), mask_.bytes().data(), effective_.data(), weight_.size());
  effective_t_ = transpose(effective_);
  dirty_ = false;
}

const Matrix& MaskedLinear::effective() const {
  refresh();
  return effective_;
}

void MaskedLinear::forward(const Matrix& x, Matrix& y) const {
  if (x.cols() != in_features()) {
    throw ContractViolation("MaskedLinear::forward: input is " + x.shape_string() +
                            ", layer expects width " + std::to_string(in_features()));
  }
  refresh();
  y.resize(x.rows(), out_features());
  for (std::size_t b = 0; b < x.rows(); ++b) std::copy(bias_.begin(), bias_.end(), y.row(b).begin());
  matmul_into(x, effective_t_, y, true);
}

void MaskedLinear::backward(const Matrix& x, const Matrix& dy, Matrix* dx) {
  if (x.cols() != in_features() || dy.cols() != out_features() || x.rows() != dy.rows()) {
    throw ContractViolation("MaskedLinear::backward: x " + x.shape_string() + ", dy " +
                            dy.shape_string() + " for layer " + weight_.shape_string());
  }
  refresh();
  matmul_tn_into(dy, x, grad_weight_, true);
  for (std::size_t b = 0; b < dy.rows(); ++b) {
    const auto row = dy.row(b);
    for (std::size_t o = 0; o < row.size(); ++o) grad_bias_[o] += row[o];
  }
  if (dx != nullptr) matmul_into(dy, effective_, *dx, false);
}

void MaskedLinear::zero_grad() {
  grad_weight_.fill(0.0);
  std::fill(grad_bias_.begin(), grad_bias_.end(), 0.0);
}

std::vector<double> masked_affine_forward(const MaskedLinear& layer, std::span<const double> x) {
  if (x.size() != layer.in_features()) {
    throw ContractViolation("masked_affine_forward: x has length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(layer.in_features()));
  }
  Matrix xm(1, x.size());
  std::copy(x.begin(), x.end(), xm.row(0).begin());
  Matrix y;
  layer.forward(xm, y);
  return {y.values().begin(), y.values().end()};
}

std::vector<double> masked_affine_backward(MaskedLinear& layer, std::span<const double> x,
                                           std::span<const double> dy) {
  if (x.size() != layer.in_features() || dy.size() != layer.out_features()) {
    throw ContractViolation("masked_affine_backward: length mismatch");
  }
  Matrix xm(1, x.size());
  std::copy(x.begin(), x.end(), xm.row(0).begin());
  Matrix dym(1, dy.size());
  std::copy(dy.begin(), dy.end(), dym.row(0).begin());
  Matrix dx;
  layer.backward(xm, dym, &dx);
  return {dx.values().begin(), dx.values().end()};
}

void sgd_step(MaskedLinear& layer, double lr, double weight_decay, std::string_view layer_name) {
  auto& gw = layer.grad_weight();
  auto& gb = layer.grad_bias();
  const bool finite =
      gw.all_finite() && std::all_of(gb.begin(), gb.end(), [](double v) { return std::isfinite(v); });
  if (!finite) {
    throw NumericError("non-finite gradient in layer '" + std::string(layer_name) + "'");
  }
  MaskedSgdArgs args;
  args.w = layer.weight_mut().data();
  args.g = gw.data();
  args.mask = layer.mask().bytes().data();
  args.n = gw.size();
  args.lr = lr;
  args.decay = weight_decay;
  kernels().masked_sgd(args);

  auto& b = layer.bias_mut();
  for (std::size_t r = 0; r < b.size(); ++r) {
    if (layer.row_live(r)) b[r] = b[r] - lr * gb[r];
    gb[r] = 0.0;
  }
}

}  // namespace lhsynth::numkit
