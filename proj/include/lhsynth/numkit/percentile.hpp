// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lhsynth::numkit {

enum class Direction { kSmallest, kLargest };

// ceil(q * n), clamped to [0, n]. Products within 1e-9 of an integer round to
// that integer so that e.g. 0.1 * 30 counts 3, not 4.
std::size_t ratio_count(double q, std::size_t n);

// The k-th order statistic from the given end, k = ratio_count(q, n) clamped
// to [1, n]. For q == 0 returns -inf (smallest) or +inf (largest), a threshold
// that selects nothing. Throws ContractViolation on empty input or q outside
// [0, 1].
double percentile_threshold(std::span<const double> values, double q, Direction dir);

// Indices of the `count` most extreme values in rank order. Equal values rank
// by ascending index. count is clamped to values.size().
std::vector<std::size_t> select_extreme(std::span<const double> values, std::size_t count,
                                        Direction dir);

}  // namespace lhsynth::numkit
