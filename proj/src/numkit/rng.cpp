// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/numkit/rng.hpp"

#include "lhsynth/common/error.hpp"

namespace lhsynth::numkit {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t SeededRng::next_u64() {
  return mix64(seed_ * 0xD1B54A32D192ED03ull + (counter_++) * 0x9E3779B97F4A7C15ull);
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw ContractViolation("SeededRng::below: n must be positive");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

SeededRng SeededRng::fork(std::uint64_t tag) const {
  return SeededRng(mix64(seed_ ^ mix64(tag + 0x632BE59BD9B4E019ull)), 0);
}

}  // namespace lhsynth::numkit
