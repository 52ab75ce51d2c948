// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace lhsynth::numkit {

enum class ActivationKind { kSigmoid, kTanh, kRelu };

std::string_view activation_name(ActivationKind kind);
std::optional<ActivationKind> parse_activation(std::string_view name);

double activate(ActivationKind kind, double x);

// d activate(x) / dx. ReLU uses 0 at x == 0.
double activation_derivative(ActivationKind kind, double x);

void activation_forward(ActivationKind kind, std::span<const double> pre, std::span<double> out);

// dx[i] = dy[i] * activation_derivative(kind, pre[i])
void activation_backward(ActivationKind kind, std::span<const double> pre,
                         std::span<const double> dy, std::span<double> dx);

}  // namespace lhsynth::numkit
