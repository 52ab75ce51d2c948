// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/hlstm/trainer.hpp"

#include <cmath>

#include "lhsynth/common/error.hpp"

namespace lhsynth::hlstm {

namespace {

void scale_all(LMModel& model, double s) {
  for (MaskedLinear* l : model.masked_layers()) {
    for (auto& g : l->grad_weight().values()) g *= s;
    for (auto& g : l->grad_bias()) g *= s;
  }
  for (auto& g : model.grad_embedding.values()) g *= s;
}

double global_norm(LMModel& model) {
  double sq = 0.0;
  for (MaskedLinear* l : model.masked_layers()) {
    // Dormant entries carry gradients but are never updated.
    const auto g = l->grad_weight().values();
    const auto m = l->mask().bytes();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (m[k]) sq += g[k] * g[k];
    }
    for (std::size_t r = 0; r < l->out_features(); ++r) {
      if (l->row_live(r)) sq += l->grad_bias()[r] * l->grad_bias()[r];
    }
  }
  for (double g : model.grad_embedding.values()) sq += g * g;
  return std::sqrt(sq);
}

}  // namespace

void embedding_step(LMModel& model, double lr, double weight_decay) {
  if (!model.grad_embedding.all_finite()) {
    throw NumericError("non-finite gradient in layer 'embedding'");
  }
  auto w = model.embedding.values();
  auto g = model.grad_embedding.values();
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = w[k] - lr * (g[k] + weight_decay * w[k]);
    g[k] = 0.0;
  }
}

EpochResult train_epoch(LMModel& model, const BatchStream& train, const TrainConfig& cfg,
                        const OptimizerState& opt, numkit::SeededRng& rng, bool collect_bridging) {
  if (train.batch != cfg.batch) throw ContractViolation("train_epoch: stream batch differs from config");
  model.dropout_h = cfg.dropout;
  const auto layers = model.masked_layers();
  const auto names = model.masked_layer_names();
  const std::size_t n_windows = train.windows(cfg.bptt);
  const std::size_t first_bridge =
      cfg.bridging_batches == 0 || cfg.bridging_batches >= n_windows ? 0 : n_windows - cfg.bridging_batches;

  EpochResult res;
  if (collect_bridging) {
    for (MaskedLinear* l : layers) res.bridging.layers.emplace_back(l->out_features(), l->in_features());
  }

  model.zero_grad();
  auto state = model.zero_state(cfg.batch);
  TokenBlock in, tgt;
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    train.window_blocks(w, cfg.bptt, in, tgt);
    Unroll u = unroll_forward(model, in, state, true, rng);
    const double nll = bptt(model, u, tgt);
    if (!std::isfinite(nll)) throw NumericError("non-finite training loss in window " + std::to_string(w));
    total += nll;
    const std::size_t n_tok = in.steps * in.batch;
    tokens += n_tok;
    scale_all(model, 1.0 / static_cast<double>(n_tok));

    if (collect_bridging && w >= first_bridge) {
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto acc = res.bridging.layers[i].values();
        const auto g = layers[i]->grad_weight().values();
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
      }
      ++res.bridging.batches;
    }

    if (cfg.clip_norm > 0.0) {
      const double norm = global_norm(model);
      if (norm > cfg.clip_norm) scale_all(model, cfg.clip_norm / norm);
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      numkit::sgd_step(*layers[i], opt.lr, cfg.weight_decay, names[i]);
    }
    embedding_step(model, opt.lr, cfg.weight_decay);
    state = std::move(u.final_state);
  }

  if (collect_bridging && res.bridging.batches > 0) {
    const double inv = 1.0 / static_cast<double>(res.bridging.batches);
    for (auto& m : res.bridging.layers) {
      for (auto& v : m.values()) v *= inv;
    }
  }
  res.mean_nll = total / static_cast<double>(tokens);
  res.windows = n_windows;
  return res;
}

double evaluate_nll(const LMModel& model, const BatchStream& stream, std::size_t window) {
  numkit::SeededRng unused(0);
  auto state = model.zero_state(stream.batch);
  TokenBlock in, tgt;
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t w = 0; w < stream.windows(window); ++w) {
    stream.window_blocks(w, window, in, tgt);
    Unroll u = unroll_forward(model, in, state, false, unused);
    total += sequence_nll(u, tgt);
    tokens += in.steps * in.batch;
    state = std::move(u.final_state);
  }
  return total / static_cast<double>(tokens);
}

void observe_validation(OptimizerState& opt, const TrainConfig& cfg, double metric) {
  if (metric < opt.best_metric) {
    opt.best_metric = metric;
    opt.stale_epochs = 0;
    return;
  }
  if (++opt.stale_epochs >= cfg.plateau_patience) {
    opt.lr = std::max(cfg.min_lr, opt.lr * cfg.lr_decay);
    opt.stale_epochs = 0;
  }
}

}  // namespace lhsynth::hlstm
