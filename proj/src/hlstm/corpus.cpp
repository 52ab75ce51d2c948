// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/hlstm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lhsynth/common/error.hpp"

namespace lhsynth::hlstm {

Vocabulary Vocabulary::from_symbols(std::string symbols) {
  Vocabulary v;
  v.index_.fill(-1);
  std::sort(symbols.begin(), symbols.end(),
            [](char a, char b) { return static_cast<unsigned char>(a) < static_cast<unsigned char>(b); });
  symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
  v.symbols_ = std::move(symbols);
  for (std::size_t i = 0; i < v.symbols_.size(); ++i) {
    v.index_[static_cast<unsigned char>(v.symbols_[i])] = static_cast<int>(i);
  }
  return v;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::array<bool, 256> seen{};
  for (char ch : text) seen[static_cast<unsigned char>(ch)] = true;
  std::string symbols;
  for (std::size_t b = 0; b < seen.size(); ++b) {
    if (seen[b]) symbols.push_back(static_cast<char>(b));
  }
  return from_symbols(std::move(symbols));
}

std::vector<std::uint32_t> Vocabulary::encode(std::string_view text) const {
  std::vector<std::uint32_t> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int id = index_[static_cast<unsigned char>(text[i])];
    if (id < 0) {
      throw InputError("byte " + std::to_string(static_cast<unsigned char>(text[i])) +
                       " at offset " + std::to_string(i) + " is not in the vocabulary");
    }
    out.push_back(static_cast<std::uint32_t>(id));
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<std::uint32_t>& tokens) const {
  std::string out;
  out.reserve(tokens.size());
  for (auto t : tokens) {
    if (t >= symbols_.size()) throw InputError("token outside vocabulary");
    out.push_back(symbols_[t]);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CorpusSplits split_tokens(const std::vector<std::uint32_t>& tokens, double train_frac,
                          double valid_frac) {
  if (!(train_frac > 0.0) || !(valid_frac > 0.0) || train_frac + valid_frac > 1.0) {
    throw ConfigError("split fractions must be positive and sum to at most 1");
  }
  const auto n = tokens.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::floor(valid_frac * static_cast<double>(n)));
  CorpusSplits s;
  s.train.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(tokens.begin() + static_cast<std::ptrdiff_t>(n_train),
                 tokens.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(tokens.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), tokens.end());
  return s;
}

BatchStream batchify(const std::vector<std::uint32_t>& tokens, std::size_t batch) {
  if (batch == 0) throw ContractViolation("batchify: batch must be positive");
  BatchStream s;
  s.batch = batch;
  s.length = tokens.size() / batch;
  if (s.length < 2) throw InputError("batchify: token stream too short for the batch size");
  s.data.resize(s.length * batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < s.length; ++t) s.data[t * batch + b] = tokens[b * s.length + t];
  }
  return s;
}

std::size_t BatchStream::windows(std::size_t window) const {
  if (window == 0) throw ContractViolation("window must be positive");
  return (length - 1 + window - 1) / window;
}

void BatchStream::window_blocks(std::size_t w, std::size_t window, TokenBlock& inputs,
                                TokenBlock& targets) const {
  const std::size_t start = w * window;
  if (start + 1 >= length) throw ContractViolation("window index out of range");
  const std::size_t steps = std::min(window, length - 1 - start);
  inputs.steps = targets.steps = steps;
  inputs.batch = targets.batch = batch;
  inputs.tokens.assign(data.begin() + static_cast<std::ptrdiff_t>(start * batch),
                       data.begin() + static_cast<std::ptrdiff_t>((start + steps) * batch));
  targets.tokens.assign(data.begin() + static_cast<std::ptrdiff_t>((start + 1) * batch),
                        data.begin() + static_cast<std::ptrdiff_t>((start + 1 + steps) * batch));
}

}  // namespace lhsynth::hlstm
