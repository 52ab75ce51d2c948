// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/numkit/mask.hpp"

#include <algorithm>

namespace lhsynth::numkit {

void Mask::set_row(std::size_t r, bool active) {
  std::fill_n(bits_.begin() + static_cast<std::ptrdiff_t>(r * cols_), cols_, active ? 1 : 0);
}

void Mask::set_col(std::size_t c, bool active) {
  for (std::size_t r = 0; r < rows_; ++r) bits_[r * cols_ + c] = active ? 1 : 0;
}

void Mask::fill(bool active) { std::fill(bits_.begin(), bits_.end(), active ? 1 : 0); }

bool Mask::row_any(std::size_t r) const {
  const auto first = bits_.begin() + static_cast<std::ptrdiff_t>(r * cols_);
  return std::any_of(first, first + static_cast<std::ptrdiff_t>(cols_),
                     [](std::uint8_t b) { return b != 0; });
}

bool Mask::col_any(std::size_t c) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    if (bits_[r * cols_ + c] != 0) return true;
  }
  return false;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

std::size_t Mask::row_count(std::size_t r) const {
  const auto first = bits_.begin() + static_cast<std::ptrdiff_t>(r * cols_);
  return static_cast<std::size_t>(std::count_if(first, first + static_cast<std::ptrdiff_t>(cols_),
                                                [](std::uint8_t b) { return b != 0; }));
}

}  // namespace lhsynth::numkit
