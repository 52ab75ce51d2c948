// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "lhsynth/hlstm/model.hpp"
#include "lhsynth/numkit/activation.hpp"

namespace lhsynth::hlstm {

namespace {

using Index = std::vector<std::size_t>;

Index keep_or_first(const std::vector<bool>& flags) {
  Index out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out.push_back(i);
  }
  if (out.empty()) out.push_back(0);
  return out;
}

void copy_sub(const MaskedLinear& src, const Index& rows, const Index& cols, MaskedLinear& dst) {
  dst = MaskedLinear(rows.size(), cols.size());
  auto& w = dst.weight_mut();
  auto& m = dst.mask_mut();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      w(r, c) = src.weight()(rows[r], cols[c]);
      m.set(r, c, src.mask()(rows[r], cols[c]));
    }
    // Biases are copied as-is: a row can lose its last kept column yet
    // still carry a live bias from the source.
    dst.bias_mut()[r] = src.bias()[rows[r]];
  }
}

// Columns of the gate input layer (H, or O at depth 0).
const MaskedLinear& input_layer(const HLSTMCellParams& cell, std::size_t g) {
  return cell.dims().hidden_depth == 1 ? cell.gate(g).hidden : cell.gate(g).output;
}

}  // namespace

LMModel compact(const LMModel& model) {
  const std::size_t n_cells = model.cells.size();
  std::vector<Index> x_keep(n_cells), s_keep(n_cells), h_keep(n_cells);

  for (std::size_t l = 0; l < n_cells; ++l) {
    const auto& cell = model.cells[l];
    const CellDims& d = cell.dims();
    std::vector<bool> produced(d.state, false), consumed(d.state, false);
    for (std::size_t g = 0; g < kNumGates; ++g) {
      const auto& in = input_layer(cell, g);
      for (std::size_t u = 0; u < d.state; ++u) {
        if (cell.gate(g).output.row_live(u)) produced[u] = true;
        if (in.mask().col_any(d.input + u)) consumed[u] = true;
      }
    }
    for (std::size_t u = 0; u < d.state; ++u) {
      const bool downstream = l + 1 < n_cells ? input_layer(model.cells[l + 1], 0).mask().col_any(u) ||
                                                    input_layer(model.cells[l + 1], 1).mask().col_any(u) ||
                                                    input_layer(model.cells[l + 1], 2).mask().col_any(u) ||
                                                    input_layer(model.cells[l + 1], 3).mask().col_any(u)
                                              : model.head.mask().col_any(u);
      if (downstream) consumed[u] = true;
    }
    std::vector<bool> s_flags(d.state);
    for (std::size_t u = 0; u < d.state; ++u) s_flags[u] = produced[u] && consumed[u];
    s_keep[l] = keep_or_first(s_flags);

    if (d.hidden_depth == 1) {
      const bool act_zero = numkit::activate(cell.hidden_activation(), 0.0) == 0.0;
      std::vector<bool> h_flags(d.hidden, false);
      for (std::size_t g = 0; g < kNumGates; ++g) {
        for (std::size_t j = 0; j < d.hidden; ++j) {
          if (cell.gate(g).output.mask().col_any(j) && (!act_zero || cell.gate(g).hidden.row_live(j))) {
            h_flags[j] = true;
          }
        }
      }
      h_keep[l] = keep_or_first(h_flags);
    }

    if (l == 0) {
      std::vector<bool> x_flags(d.input, false);
      for (std::size_t g = 0; g < kNumGates; ++g) {
        for (std::size_t c = 0; c < d.input; ++c) {
          if (input_layer(cell, g).mask().col_any(c)) x_flags[c] = true;
        }
      }
      x_keep[l] = keep_or_first(x_flags);
    } else {
      x_keep[l] = s_keep[l - 1];
    }
  }

  LMModel out;
  out.dropout_h = model.dropout_h;
  out.embedding = Matrix(model.embedding.rows(), x_keep[0].size());
  out.grad_embedding = Matrix(model.embedding.rows(), x_keep[0].size());
  for (std::size_t v = 0; v < model.embedding.rows(); ++v) {
    for (std::size_t c = 0; c < x_keep[0].size(); ++c) out.embedding(v, c) = model.embedding(v, x_keep[0][c]);
  }

  for (std::size_t l = 0; l < n_cells; ++l) {
    const auto& cell = model.cells[l];
    const CellDims& d = cell.dims();
    CellDims nd;
    nd.input = x_keep[l].size();
    nd.state = s_keep[l].size();
    nd.hidden = d.hidden_depth == 1 ? h_keep[l].size() : 0;
    nd.hidden_depth = d.hidden_depth;
    HLSTMCellParams nc(nd, cell.hidden_activation());

    Index z_cols = x_keep[l];
    for (std::size_t u : s_keep[l]) z_cols.push_back(d.input + u);
    for (std::size_t g = 0; g < kNumGates; ++g) {
      if (d.hidden_depth == 1) {
        copy_sub(cell.gate(g).hidden, h_keep[l], z_cols, nc.gate(g).hidden);
        copy_sub(cell.gate(g).output, s_keep[l], h_keep[l], nc.gate(g).output);
      } else {
        copy_sub(cell.gate(g).output, s_keep[l], z_cols, nc.gate(g).output);
      }
    }
    out.cells.push_back(std::move(nc));
  }

  Index vocab_rows(model.head.out_features());
  for (std::size_t v = 0; v < vocab_rows.size(); ++v) vocab_rows[v] = v;
  copy_sub(model.head, vocab_rows, s_keep.back(), out.head);
  return out;
}

}  // namespace lhsynth::hlstm
