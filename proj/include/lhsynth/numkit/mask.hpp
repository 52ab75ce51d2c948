// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lhsynth::numkit {

// Binary connectivity mask, one byte per entry (0 = dormant, 1 = active).
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool active = true)
      : rows_(rows), cols_(cols), bits_(rows * cols, active ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return bits_.size(); }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool active) { bits_[r * cols_ + c] = active ? 1 : 0; }

  void set_row(std::size_t r, bool active);
  void set_col(std::size_t c, bool active);
  void fill(bool active);

  bool row_any(std::size_t r) const;
  bool col_any(std::size_t c) const;
  std::size_t count() const;
  std::size_t row_count(std::size_t r) const;

  std::span<const std::uint8_t> bytes() const { return bits_; }
  std::span<std::uint8_t> bytes() { return bits_; }

  friend bool operator==(const Mask& a, const Mask& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace lhsynth::numkit
