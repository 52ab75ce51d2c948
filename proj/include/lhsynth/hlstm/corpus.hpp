// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lhsynth/hlstm/model.hpp"

namespace lhsynth::hlstm {

// Byte-level vocabulary: the sorted distinct bytes of a text.
class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary from_text(std::string_view text);
  static Vocabulary from_symbols(std::string symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbols() const { return symbols_; }

  // Throws InputError on a byte outside the vocabulary.
  std::vector<std::uint32_t> encode(std::string_view text) const;
  std::string decode(const std::vector<std::uint32_t>& tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.symbols_ == b.symbols_; }

 private:
  std::string symbols_;
  std::array<int, 256> index_{};
};

std::string read_text_file(const std::string& path);

struct CorpusSplits {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> valid;
  std::vector<std::uint32_t> test;
};

// Contiguous split: the first train_frac of the stream, then valid_frac,
// then the rest.
CorpusSplits split_tokens(const std::vector<std::uint32_t>& tokens, double train_frac,
                          double valid_frac);

// `batch` parallel streams cut from consecutive chunks of the token list;
// the remainder that does not fill a full column is dropped.
struct BatchStream {
  std::size_t batch = 0;
  std::size_t length = 0;              // tokens per stream
  std::vector<std::uint32_t> data;     // time-major: data[t * batch + b]

  // Number of BPTT windows of at most `window` steps.
  std::size_t windows(std::size_t window) const;
  // Inputs and next-token targets of window `w`.
  void window_blocks(std::size_t w, std::size_t window, TokenBlock& inputs, TokenBlock& targets) const;
};

BatchStream batchify(const std::vector<std::uint32_t>& tokens, std::size_t batch);

}  // namespace lhsynth::hlstm
