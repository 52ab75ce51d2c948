// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/numkit/activation.hpp"

#include <cmath>

#include "lhsynth/common/error.hpp"

namespace lhsynth::numkit {

std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSigmoid:
      return "sigmoid";
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kRelu:
      return "relu";
  }
  return "unknown";
}

std::optional<ActivationKind> parse_activation(std::string_view name) {
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  if (name == "tanh") return ActivationKind::kTanh;
  if (name == "relu") return ActivationKind::kRelu;
  return std::nullopt;
}

namespace {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activate(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kSigmoid:
      return sigmoid(x);
    case ActivationKind::kTanh:
      return std::tanh(x);
    case ActivationKind::kRelu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

double activation_derivative(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case ActivationKind::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void activation_forward(ActivationKind kind, std::span<const double> pre, std::span<double> out) {
  if (pre.size() != out.size()) throw ContractViolation("activation_forward: length mismatch");
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = activate(kind, pre[i]);
}

void activation_backward(ActivationKind kind, std::span<const double> pre,
                         std::span<const double> dy, std::span<double> dx) {
  if (pre.size() != dy.size() || pre.size() != dx.size()) {
    throw ContractViolation("activation_backward: length mismatch");
  }
  for (std::size_t i = 0; i < pre.size(); ++i) dx[i] = dy[i] * activation_derivative(kind, pre[i]);
}

}  // namespace lhsynth::numkit
