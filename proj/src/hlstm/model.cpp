// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/hlstm/model.hpp"

#include <algorithm>
#include <cmath>

#include "lhsynth/common/error.hpp"

namespace lhsynth::hlstm {

LMModel::LMModel(const ModelDims& dims, numkit::ActivationKind hidden_activation)
    : embedding(dims.vocab, dims.embed),
      grad_embedding(dims.vocab, dims.embed),
      head(dims.vocab, dims.state) {
  if (dims.vocab < 2) throw ContractViolation("LMModel: vocabulary needs at least 2 symbols");
  if (dims.layers < 1) throw ContractViolation("LMModel: at least one recurrent layer");
  for (std::size_t l = 0; l < dims.layers; ++l) {
    CellDims cd;
    cd.input = l == 0 ? dims.embed : dims.state;
    cd.state = dims.state;
    cd.hidden = dims.hidden;
    cd.hidden_depth = dims.hidden_depth;
    cells.emplace_back(cd, hidden_activation);
  }
}

ModelDims LMModel::dims() const {
  ModelDims d;
  d.vocab = embedding.rows();
  d.embed = embedding.cols();
  d.layers = cells.size();
  if (!cells.empty()) {
    d.state = cells.front().dims().state;
    d.hidden = cells.front().dims().hidden;
    d.hidden_depth = cells.front().dims().hidden_depth;
  }
  return d;
}

std::vector<MaskedLinear*> LMModel::cell_layers() {
  std::vector<MaskedLinear*> out;
  for (auto& cell : cells) {
    for (MaskedLinear* l : cell.layers()) out.push_back(l);
  }
  return out;
}

std::vector<const MaskedLinear*> LMModel::cell_layers() const {
  std::vector<const MaskedLinear*> out;
  for (const auto& cell : cells) {
    for (const MaskedLinear* l : cell.layers()) out.push_back(l);
  }
  return out;
}

std::vector<MaskedLinear*> LMModel::masked_layers() {
  auto out = cell_layers();
  out.push_back(&head);
  return out;
}

std::vector<std::string> LMModel::masked_layer_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    for (auto& n : cells[l].layer_names("cell" + std::to_string(l) + ".")) out.push_back(n);
  }
  out.push_back("head");
  return out;
}

std::vector<HLSTMState> LMModel::zero_state(std::size_t batch) const {
  std::vector<HLSTMState> s;
  for (const auto& cell : cells) s.push_back(HLSTMState::zeros(batch, cell.dims().state));
  return s;
}

void LMModel::zero_grad() {
  for (MaskedLinear* l : masked_layers()) l->zero_grad();
  grad_embedding.fill(0.0);
}

void LMModel::apply_masks() {
  for (MaskedLinear* l : masked_layers()) l->apply_mask();
}

void init_uniform(LMModel& model, numkit::SeededRng& rng) {
  for (auto& v : model.embedding.values()) v = rng.uniform(-0.1, 0.1);
  for (MaskedLinear* layer : model.masked_layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer->in_features()));
    for (auto& w : layer->weight_mut().values()) w = rng.uniform(-bound, bound);
    std::fill(layer->bias_mut().begin(), layer->bias_mut().end(), 0.0);
    layer->apply_mask();
  }
}

Unroll unroll_forward(const LMModel& model, const TokenBlock& inputs,
                      const std::vector<HLSTMState>& init, bool train, numkit::SeededRng& rng) {
  const std::size_t batch = inputs.batch;
  const std::size_t vocab = model.vocab();
  if (inputs.tokens.size() != inputs.steps * batch) {
    throw ContractViolation("unroll_forward: token block size does not match steps x batch");
  }
  if (init.size() != model.cells.size()) {
    throw ContractViolation("unroll_forward: one initial state per recurrent layer required");
  }
  for (std::uint32_t tok : inputs.tokens) {
    if (tok >= vocab) {
      throw InputError("unroll_forward: token " + std::to_string(tok) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
  }

  Unroll u;
  u.inputs = inputs;
  u.logits.resize(inputs.steps);
  u.caches.resize(inputs.steps);
  u.head_inputs.resize(inputs.steps);
  std::vector<HLSTMState> state = init;
  const std::size_t embed = model.embedding.cols();

  Matrix x(batch, embed);
  for (std::size_t t = 0; t < inputs.steps; ++t) {
    x.resize(batch, embed);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto src = model.embedding.row(inputs.at(t, b));
      std::copy(src.begin(), src.end(), x.row(b).begin());
    }
    u.caches[t].resize(model.cells.size());
    const Matrix* layer_in = &x;
    for (std::size_t l = 0; l < model.cells.size(); ++l) {
      try {
        state[l] = cell_forward(model.cells[l], *layer_in, state[l], train, model.dropout_h, rng,
                                u.caches[t][l]);
      } catch (const NumericError& e) {
        throw NumericError("step " + std::to_string(t) + ", layer " + std::to_string(l) + ": " +
                           e.what());
      }
      layer_in = &state[l].h;
    }
    u.head_inputs[t] = *layer_in;
    model.head.forward(u.head_inputs[t], u.logits[t]);
  }
  u.final_state = std::move(state);
  return u;
}

namespace {

// Log-softmax NLL of one row; writes softmax into probs when non-null.
double row_nll(std::span<const double> logits, std::uint32_t target, std::span<double> probs) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_z = mx + std::log(sum);
  if (!probs.empty()) {
    for (std::size_t k = 0; k < logits.size(); ++k) probs[k] = std::exp(logits[k] - log_z);
  }
  return log_z - logits[target];
}

void check_targets(const Unroll& unroll, const TokenBlock& targets, std::size_t vocab) {
  if (targets.steps != unroll.logits.size() || targets.batch != unroll.inputs.batch) {
    throw ContractViolation("bptt: targets do not match the unrolled block");
  }
  for (std::uint32_t tok : targets.tokens) {
    if (tok >= vocab) throw InputError("bptt: target token outside vocabulary");
  }
}

}  // namespace

double sequence_nll(const Unroll& unroll, const TokenBlock& targets) {
  const std::size_t vocab = unroll.logits.empty() ? 0 : unroll.logits.front().cols();
  check_targets(unroll, targets, vocab);
  double total = 0.0;
  for (std::size_t t = 0; t < unroll.logits.size(); ++t) {
    for (std::size_t b = 0; b < targets.batch; ++b) {
      total += row_nll(unroll.logits[t].row(b), targets.at(t, b), {});
    }
  }
  return total;
}

double bptt(LMModel& model, Unroll& unroll, const TokenBlock& targets) {
  check_targets(unroll, targets, model.vocab());
  const std::size_t steps = unroll.logits.size();
  const std::size_t batch = targets.batch;
  const std::size_t layers = model.cells.size();

  double total = 0.0;
  std::vector<Matrix> dh(layers), dc(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    dh[l] = Matrix(batch, model.cells[l].dims().state);
    dc[l] = Matrix(batch, model.cells[l].dims().state);
  }

  Matrix dlogits;
  Matrix dtop;
  for (std::size_t t = steps; t-- > 0;) {
    dlogits.resize(batch, model.vocab());
    for (std::size_t b = 0; b < batch; ++b) {
      auto probs = dlogits.row(b);
      total += row_nll(unroll.logits[t].row(b), targets.at(t, b), probs);
      probs[targets.at(t, b)] -= 1.0;
    }
    model.head.backward(unroll.head_inputs[t], dlogits, &dtop);
    {
      auto acc = dh[layers - 1].values();
      const auto add = dtop.values();
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += add[k];
    }
    for (std::size_t l = layers; l-- > 0;) {
      CellGrads g = cell_backward(model.cells[l], unroll.caches[t][l], dh[l], dc[l]);
      dh[l] = std::move(g.dprev.h);
      dc[l] = std::move(g.dprev.c);
      if (l > 0) {
        auto acc = dh[l - 1].values();
        const auto add = g.dx.values();
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += add[k];
      } else {
        for (std::size_t b = 0; b < batch; ++b) {
          auto dst = model.grad_embedding.row(unroll.inputs.at(t, b));
          const auto src = g.dx.row(b);
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
      }
    }
  }
  return total;
}

double perplexity(double mean_nll) { return std::exp(mean_nll); }

ParamCount layer_param_count(const MaskedLinear& layer) {
  ParamCount p;
  p.total = layer.out_features() * layer.in_features() + layer.out_features();
  p.active = layer.mask().count();
  for (std::size_t r = 0; r < layer.out_features(); ++r) {
    if (layer.row_live(r)) ++p.active;
  }
  return p;
}

ParamCount cell_param_count(const LMModel& model) {
  ParamCount p;
  for (const MaskedLinear* l : model.cell_layers()) {
    const ParamCount c = layer_param_count(*l);
    p.total += c.total;
    p.active += c.active;
  }
  return p;
}

ParamCount io_param_count(const LMModel& model) {
  ParamCount p = layer_param_count(model.head);
  p.total += model.embedding.size();
  p.active += model.embedding.size();
  return p;
}

}  // namespace lhsynth::hlstm
