// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/numkit/percentile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lhsynth/common/error.hpp"

namespace lhsynth::numkit {

std::size_t ratio_count(double q, std::size_t n) {
  if (!(q > 0.0) || n == 0) return 0;
  const double product = q * static_cast<double>(n);
  const double nearest = std::round(product);
  const double k = std::abs(product - nearest) <= 1e-9 ? nearest : std::ceil(product);
  if (k >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(k);
}

std::vector<std::size_t> select_extreme(std::span<const double> values, std::size_t count,
                                        Direction dir) {
  count = std::min(count, values.size());
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(count);
  if (dir == Direction::kSmallest) {
    std::partial_sort(idx.begin(), mid, idx.end(), [&](std::size_t a, std::size_t b) {
      return values[a] < values[b] || (values[a] == values[b] && a < b);
    });
  } else {
    std::partial_sort(idx.begin(), mid, idx.end(), [&](std::size_t a, std::size_t b) {
      return values[a] > values[b] || (values[a] == values[b] && a < b);
    });
  }
  idx.resize(count);
  return idx;
}

double percentile_threshold(std::span<const double> values, double q, Direction dir) {
  if (values.empty()) throw ContractViolation("percentile_threshold: empty value list");
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ContractViolation("percentile_threshold: q must lie in [0, 1]");
  }
  if (q == 0.0) {
    return dir == Direction::kSmallest ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
  }
  const std::size_t k = std::clamp<std::size_t>(ratio_count(q, values.size()), 1, values.size());
  std::vector<double> sorted(values.begin(), values.end());
  const auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(k - 1);
  if (dir == Direction::kSmallest) {
    std::nth_element(sorted.begin(), nth, sorted.end());
  } else {
    std::nth_element(sorted.begin(), nth, sorted.end(), std::greater<>());
  }
  return *nth;
}

}  // namespace lhsynth::numkit
