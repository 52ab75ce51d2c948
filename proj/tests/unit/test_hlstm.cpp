// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>

#include "doctest.h"
#include "lhsynth/common/error.hpp"
#include "lhsynth/hlstm/cell.hpp"
#include "lhsynth/hlstm/corpus.hpp"
#include "lhsynth/hlstm/model.hpp"
#include "lhsynth/hlstm/trainer.hpp"
#include "support/fd.hpp"
#include "support/random_model.hpp"

using namespace lhsynth;
using namespace lhsynth::hlstm;
using numkit::ActivationKind;
using numkit::SeededRng;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

HLSTMCellParams random_cell(CellDims d, SeededRng& rng, double keep = 1.0,
                            ActivationKind act = ActivationKind::kTanh) {
  HLSTMCellParams p(d, act);
  for (MaskedLinear* l : p.layers()) {
    for (auto& w : l->weight_mut().values()) w = rng.uniform(-0.8, 0.8);
    for (auto& b : l->bias_mut()) b = rng.uniform(-0.3, 0.3);
    for (std::size_t r = 0; r < l->out_features(); ++r) {
      for (std::size_t c = 0; c < l->in_features(); ++c) l->mask_mut().set(r, c, rng.bernoulli(keep));
    }
    l->apply_mask();
  }
  return p;
}

Matrix random_matrix(SeededRng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

HLSTMState step(const HLSTMCellParams& p, const Matrix& x, const HLSTMState& prev) {
  SeededRng rng(1);
  StepCache cache;
  return cell_forward(p, x, prev, false, 0.0, rng, cache);
}

}  // namespace

TEST_CASE("zero cell halves the cell state") {
  HLSTMCellParams p(CellDims{2, 3, 4, 1});
  const Matrix x = Matrix::from_rows({{0.7, -1.2}});
  HLSTMState prev{Matrix::from_rows({{0.1, 0.2, -0.3}}), Matrix::from_rows({{1.0, -2.0, 0.5}})};
  const HLSTMState next = step(p, x, prev);
  for (std::size_t u = 0; u < 3; ++u) {
    CHECK(next.c(0, u) == doctest::Approx(0.5 * prev.c(0, u)));
    CHECK(next.h(0, u) == doctest::Approx(0.5 * std::tanh(0.5 * prev.c(0, u))));
  }
}

TEST_CASE("zero previous cell state and silent update gate give zero output") {
  SeededRng rng(3);
  HLSTMCellParams p = random_cell(CellDims{2, 3, 4, 1}, rng);
  auto& og = p.gate(Gate::kUpdate).output;
  og.weight_mut().fill(0.0);
  std::fill(og.bias_mut().begin(), og.bias_mut().end(), 0.0);
  const HLSTMState next = step(p, random_matrix(rng, 1, 2), HLSTMState{random_matrix(rng, 1, 3), Matrix(1, 3)});
  for (double v : next.c.values()) CHECK(v == 0.0);
  for (double v : next.h.values()) CHECK(v == 0.0);
}

TEST_CASE("scalar cell matches a hand trace") {
  HLSTMCellParams p(CellDims{1, 1, 1, 1}, ActivationKind::kRelu);
  // gate g: H = [wx, wh], b; O = [v], b
  const double wx[4] = {0.5, -0.4, 0.3, 0.8};
  const double wh[4] = {0.2, 0.6, -0.7, 0.1};
  const double hb[4] = {0.1, 0.2, 0.3, -0.1};
  const double ov[4] = {1.5, -0.5, 2.0, 0.9};
  const double ob[4] = {0.05, -0.1, 0.2, 0.0};
  for (std::size_t g = 0; g < 4; ++g) {
    p.gate(g).hidden.weight_mut() = Matrix::from_rows({{wx[g], wh[g]}});
    p.gate(g).hidden.bias_mut() = {hb[g]};
    p.gate(g).output.weight_mut() = Matrix::from_rows({{ov[g]}});
    p.gate(g).output.bias_mut() = {ob[g]};
  }
  const double x = 0.9, h0 = -0.3, c0 = 0.4;
  double val[4];
  for (std::size_t g = 0; g < 4; ++g) {
    const double hid = std::max(0.0, wx[g] * x + wh[g] * h0 + hb[g]);
    const double pre = ov[g] * hid + ob[g];
    val[g] = g == 3 ? std::tanh(pre) : sigmoid(pre);
  }
  const double c1 = val[0] * c0 + val[1] * val[3];
  const double h1 = val[2] * std::tanh(c1);
  const HLSTMState next =
      step(p, Matrix::from_rows({{x}}), HLSTMState{Matrix::from_rows({{h0}}), Matrix::from_rows({{c0}})});
  CHECK(next.c(0, 0) == doctest::Approx(c1).epsilon(1e-14));
  CHECK(next.h(0, 0) == doctest::Approx(h1).epsilon(1e-14));
}

TEST_CASE("depth-0 cell is a plain LSTM step") {
  SeededRng rng(11);
  const CellDims d{3, 4, 0, 0};
  HLSTMCellParams p = random_cell(d, rng);
  CHECK(p.layers().size() == 4);
  const Matrix x = random_matrix(rng, 2, 3);
  const HLSTMState prev{random_matrix(rng, 2, 4), random_matrix(rng, 2, 4)};
  const HLSTMState next = step(p, x, prev);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t u = 0; u < 4; ++u) {
      double pre[4];
      for (std::size_t g = 0; g < 4; ++g) {
        const auto& l = p.gate(g).output;
        double acc = l.bias()[u];
        for (std::size_t k = 0; k < 3; ++k) acc += l.weight()(u, k) * x(b, k);
        for (std::size_t k = 0; k < 4; ++k) acc += l.weight()(u, 3 + k) * prev.h(b, k);
        pre[g] = acc;
      }
      const double c = sigmoid(pre[0]) * prev.c(b, u) + sigmoid(pre[1]) * std::tanh(pre[3]);
      CHECK(next.c(b, u) == doctest::Approx(c).epsilon(1e-13));
      CHECK(next.h(b, u) == doctest::Approx(sigmoid(pre[2]) * std::tanh(c)).epsilon(1e-13));
    }
  }
}

TEST_CASE("cell outputs stay inside their ranges") {
  SeededRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    HLSTMCellParams p = random_cell(CellDims{3, 4, 5, 1}, rng, 0.7, ActivationKind::kRelu);
    StepCache cache;
    SeededRng r(trial);
    const HLSTMState next = cell_forward(p, random_matrix(rng, 3, 3, 3.0),
                                         HLSTMState{random_matrix(rng, 3, 4), random_matrix(rng, 3, 4, 3.0)},
                                         true, 0.3, r, cache);
    for (double v : next.h.values()) CHECK((v > -1.0 && v < 1.0));
    for (std::size_t g = 0; g < 3; ++g) {
      for (double v : cache.gates[g].value.values()) CHECK((v > 0.0 && v < 1.0));
    }
  }
}

TEST_CASE("evaluation ignores dropout and is bitwise repeatable") {
  SeededRng rng(8);
  HLSTMCellParams p = random_cell(CellDims{3, 4, 5, 1}, rng, 0.8, ActivationKind::kRelu);
  const Matrix x = random_matrix(rng, 2, 3);
  const HLSTMState prev{random_matrix(rng, 2, 4), random_matrix(rng, 2, 4)};
  StepCache c1, c2, c3;
  SeededRng r1(1), r2(2), r3(3);
  const auto a = cell_forward(p, x, prev, false, 0.5, r1, c1);
  const auto b = cell_forward(p, x, prev, false, 0.5, r2, c2);
  const auto clean = cell_forward(p, x, prev, false, 0.0, r3, c3);
  CHECK(a.h == b.h);
  CHECK(a.c == b.c);
  CHECK(a.h == clean.h);
}

TEST_CASE("pruned input columns do not influence the cell") {
  SeededRng rng(13);
  HLSTMCellParams p = random_cell(CellDims{4, 3, 5, 1}, rng, 0.9);
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t r = 0; r < 5; ++r) p.gate(g).hidden.mask_mut().set(r, 2, false);
    p.gate(g).hidden.apply_mask();
  }
  const HLSTMState prev{random_matrix(rng, 1, 3), random_matrix(rng, 1, 3)};
  Matrix x = random_matrix(rng, 1, 4);
  const auto a = step(p, x, prev);
  x(0, 2) = 123.0;
  const auto b = step(p, x, prev);
  CHECK(a.h == b.h);
  CHECK(a.c == b.c);
}

TEST_CASE("cell backward basics") {
  SeededRng rng(17);
  HLSTMCellParams p = random_cell(CellDims{3, 4, 5, 1}, rng);
  StepCache cache;
  const HLSTMState prev{random_matrix(rng, 2, 4), random_matrix(rng, 2, 4)};
  cell_forward(p, random_matrix(rng, 2, 3), prev, false, 0.0, rng, cache);

  SUBCASE("zero upstream gradient gives zero gradients") {
    const CellGrads g = cell_backward(p, cache, Matrix(2, 4), Matrix(2, 4));
    for (double v : g.dx.values()) CHECK(v == 0.0);
    for (double v : g.dprev.h.values()) CHECK(v == 0.0);
    for (double v : g.dprev.c.values()) CHECK(v == 0.0);
    for (const MaskedLinear* l : p.layers()) {
      for (double v : l->grad_weight().values()) CHECK(v == 0.0);
    }
  }
  SUBCASE("cache reuse is refused") {
    cell_backward(p, cache, Matrix(2, 4), Matrix(2, 4));
    CHECK_THROWS_AS(cell_backward(p, cache, Matrix(2, 4), Matrix(2, 4)), ContractViolation);
  }
}

TEST_CASE("zero cell passes half the cell-state gradient back") {
  HLSTMCellParams p(CellDims{2, 3, 2, 1});
  StepCache cache;
  SeededRng rng(0);
  cell_forward(p, Matrix(1, 2), HLSTMState{Matrix(1, 3), Matrix::from_rows({{0.3, -0.2, 0.9}})}, false, 0.0,
               rng, cache);
  const Matrix dc = Matrix::from_rows({{1.0, -2.0, 0.5}});
  const CellGrads g = cell_backward(p, cache, Matrix(1, 3), dc);
  for (std::size_t u = 0; u < 3; ++u) CHECK(g.dprev.c(0, u) == doctest::Approx(0.5 * dc(0, u)));
}

TEST_CASE("cell gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeededRng rng(100 + seed);
    HLSTMCellParams p = random_cell(CellDims{3, 4, 5, 1}, rng, 0.6);
    const Matrix x = random_matrix(rng, 2, 3);
    const HLSTMState prev{random_matrix(rng, 2, 4), random_matrix(rng, 2, 4)};
    const Matrix wh = random_matrix(rng, 2, 4), wc = random_matrix(rng, 2, 4);
    auto loss = [&] {
      const auto s = step(p, x, prev);
      double v = 0.0;
      for (std::size_t k = 0; k < wh.size(); ++k) v += wh.values()[k] * s.h.values()[k] + wc.values()[k] * s.c.values()[k];
      return v;
    };
    StepCache cache;
    SeededRng r(0);
    cell_forward(p, x, prev, false, 0.0, r, cache);
    const CellGrads g = cell_backward(p, cache, wh, wc);
    double worst = 0.0;
    for (MaskedLinear* l : p.layers()) worst = std::max(worst, testing::layer_max_rel_err(*l, loss));
    Matrix xv = x;
    HLSTMState pv = prev;
    auto loss_in = [&] {
      const auto s = step(p, xv, pv);
      double v = 0.0;
      for (std::size_t k = 0; k < wh.size(); ++k) v += wh.values()[k] * s.h.values()[k] + wc.values()[k] * s.c.values()[k];
      return v;
    };
    for (std::size_t k = 0; k < xv.size(); ++k)
      worst = std::max(worst, testing::rel_err(g.dx.values()[k], testing::central_difference(loss_in, xv.values()[k])));
    for (std::size_t k = 0; k < pv.h.size(); ++k) {
      worst = std::max(worst, testing::rel_err(g.dprev.h.values()[k], testing::central_difference(loss_in, pv.h.values()[k])));
      worst = std::max(worst, testing::rel_err(g.dprev.c.values()[k], testing::central_difference(loss_in, pv.c.values()[k])));
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("unrolling") {
  SeededRng rng(21);
  const ModelDims dims{5, 3, 4, 5, 1, 1};

  SUBCASE("two-symbol zero model predicts uniformly") {
    LMModel m(ModelDims{2, 2, 3, 3, 1, 1});
    const TokenBlock in = testing::random_block(rng, 4, 2, 2);
    const Unroll u = unroll_forward(m, in, m.zero_state(2), false, rng);
    for (const auto& l : u.logits) {
      for (double v : l.values()) CHECK(v == 0.0);
    }
    CHECK(sequence_nll(u, in) == doctest::Approx(8 * std::log(2.0)));
  }

  SUBCASE("three steps equal three chained cell steps") {
    LMModel m = testing::random_model(dims, rng, 0.7);
    const TokenBlock in = testing::random_block(rng, 3, 2, 5);
    auto init = m.zero_state(2);
    init[0].h = random_matrix(rng, 2, 4);
    init[0].c = random_matrix(rng, 2, 4);
    const Unroll u = unroll_forward(m, in, init, false, rng);
    HLSTMState s = init[0];
    for (std::size_t t = 0; t < 3; ++t) {
      Matrix x(2, 3);
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t k = 0; k < 3; ++k) x(b, k) = m.embedding(in.at(t, b), k);
      }
      s = step(m.cells[0], x, s);
      Matrix logits;
      m.head.forward(s.h, logits);
      CHECK(logits == u.logits[t]);
    }
    CHECK(u.final_state[0].h == s.h);
  }

  SUBCASE("out-of-range token is an input error") {
    LMModel m(dims);
    TokenBlock in{1, 1, {7}};
    CHECK_THROWS_AS(unroll_forward(m, in, m.zero_state(1), false, rng), InputError);
  }
}

TEST_CASE("uniform logits cost ln V per step") {
  LMModel m(ModelDims{6, 2, 3, 3, 1, 1});
  SeededRng rng(2);
  const TokenBlock in = testing::random_block(rng, 4, 3, 6);
  const TokenBlock tgt = testing::random_block(rng, 4, 3, 6);
  Unroll u = unroll_forward(m, in, m.zero_state(3), false, rng);
  CHECK(bptt(m, u, tgt) == doctest::Approx(12 * std::log(6.0)));
}

TEST_CASE("single-step bptt is the cross-entropy gradient") {
  SeededRng rng(4);
  LMModel m = testing::random_model(ModelDims{4, 2, 3, 3, 1, 1}, rng, 1.0);
  const TokenBlock in{1, 1, {1}}, tgt{1, 1, {3}};
  Unroll u = unroll_forward(m, in, m.zero_state(1), false, rng);
  const Matrix logits = u.logits[0];
  const Matrix h = u.head_inputs[0];
  m.zero_grad();
  bptt(m, u, tgt);
  double z = 0.0;
  for (double v : logits.values()) z += std::exp(v);
  for (std::size_t k = 0; k < 4; ++k) {
    const double p = std::exp(logits(0, k)) / z - (k == 3 ? 1.0 : 0.0);
    CHECK(m.head.grad_bias()[k] == doctest::Approx(p).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.head.grad_weight()(k, j) == doctest::Approx(p * h(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("bptt matches finite differences on random small models") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(500 + seed);
    const int depth = seed % 5 == 4 ? 0 : 1;
    const std::size_t layers = seed % 7 == 3 ? 2 : 1;
    const ModelDims dims{4, 2, 3, 3, depth, layers};
    LMModel m = testing::random_model(dims, rng, 0.6, seed % 2 ? ActivationKind::kTanh : ActivationKind::kSigmoid);
    const TokenBlock in = testing::random_block(rng, 4, 2, 4);
    const TokenBlock tgt = testing::random_block(rng, 4, 2, 4);
    CAPTURE(seed);
    CHECK(testing::model_gradient_error(m, in, tgt) <= 1e-5);
  }
}

TEST_CASE("perplexity") {
  CHECK(perplexity(std::log(10.0)) == doctest::Approx(10.0));
  CHECK(perplexity(0.0) == 1.0);
  CHECK(perplexity(std::log(50.0)) == doctest::Approx(50.0));
}

TEST_CASE("parameter counts") {
  MaskedLinear l(2, 2);
  CHECK(layer_param_count(l).total == 6);
  CHECK(layer_param_count(l).active == 6);
  l.mask_mut().set(0, 1, false);
  l.apply_mask();
  CHECK(layer_param_count(l).active == 5);
  l.mask_mut().set(0, 0, false);
  l.apply_mask();
  CHECK(layer_param_count(l).active == 3);

  SeededRng rng(9);
  LMModel m = testing::random_model(ModelDims{7, 3, 4, 5, 1, 1}, rng, 0.5);
  std::size_t total = 0, active = 0;
  for (const MaskedLinear* layer : m.cell_layers()) {
    for (std::size_t r = 0; r < layer->out_features(); ++r) {
      bool live = false;
      for (std::size_t c = 0; c < layer->in_features(); ++c) {
        ++total;
        if (layer->mask()(r, c)) {
          ++active;
          live = true;
        }
      }
      ++total;
      if (live) ++active;
    }
  }
  CHECK(cell_param_count(m).total == total);
  CHECK(cell_param_count(m).active == active);
}

TEST_CASE("compacted model matches the masked model") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeededRng rng(900 + seed);
    const ModelDims dims{6, 5, 6, 7, 1, seed % 3 == 2 ? 2u : 1u};
    LMModel m = testing::random_model(dims, rng, 0.6, ActivationKind::kRelu);
    // Kill some structure outright.
    for (auto& cell : m.cells) {
      for (std::size_t g = 0; g < kNumGates; ++g) {
        cell.gate(g).hidden.mask_mut().set_row(1, false);
        cell.gate(g).output.mask_mut().set_col(4, false);
        cell.gate(g).output.mask_mut().set_row(2, false);
        cell.gate(g).hidden.mask_mut().set_col(0, false);
      }
    }
    m.apply_masks();
    const LMModel c = compact(m);
    CHECK(c.cells[0].dims().hidden < 7);
    CHECK(c.cells[0].dims().state < 6);
    const TokenBlock in = testing::random_block(rng, 5, 3, 6);
    const Unroll a = unroll_forward(m, in, m.zero_state(3), false, rng);
    const Unroll b = unroll_forward(c, in, c.zero_state(3), false, rng);
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t k = 0; k < a.logits[t].size(); ++k) {
        CHECK(b.logits[t].values()[k] == doctest::Approx(a.logits[t].values()[k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("vocabulary and batching") {
  const Vocabulary v = Vocabulary::from_text("hello world");
  CHECK(v.size() == 8);
  CHECK(v.decode(v.encode("low door")) == "low door");
  CHECK_THROWS_AS(v.encode("z"), InputError);

  std::vector<std::uint32_t> toks(103);
  for (std::size_t i = 0; i < toks.size(); ++i) toks[i] = static_cast<std::uint32_t>(i);
  const CorpusSplits s = split_tokens(toks, 0.9, 0.05);
  CHECK(s.train.size() == 92);
  CHECK(s.valid.size() == 5);
  CHECK(s.test.size() == 6);

  const BatchStream bs = batchify(s.train, 4);
  CHECK(bs.length == 23);
  CHECK(bs.windows(10) == 3);
  TokenBlock in, tgt;
  bs.window_blocks(2, 10, in, tgt);
  CHECK(in.steps == 2);
  CHECK(in.at(0, 1) == 23 + 20);
  CHECK(tgt.at(1, 3) == 69 + 22);
}

TEST_CASE("training lowers the loss on a tiny corpus") {
  const std::string text = "abcabcabdabcabcabdabcabcabd abcabcabdabcabcabd abcabcabd abcabd abcabcabd";
  const Vocabulary v = Vocabulary::from_text(text);
  std::vector<std::uint32_t> toks;
  for (int rep = 0; rep < 6; ++rep) {
    const auto e = v.encode(text);
    toks.insert(toks.end(), e.begin(), e.end());
  }
  TrainConfig cfg;
  cfg.batch = 4;
  cfg.bptt = 8;
  cfg.lr = 1.0;
  const BatchStream bs = batchify(toks, cfg.batch);
  SeededRng rng(1);
  LMModel m(ModelDims{v.size(), 4, 8, 8, 1, 1});
  init_uniform(m, rng);
  OptimizerState opt;
  opt.lr = cfg.lr;
  const double before = evaluate_nll(m, bs, 8);
  EpochResult last;
  for (int e = 0; e < 15; ++e) last = train_epoch(m, bs, cfg, opt, rng, e == 14);
  CHECK(evaluate_nll(m, bs, 8) < before - 0.3);
  CHECK(last.bridging.layers.size() == m.masked_layers().size());
  CHECK(last.bridging.batches == bs.windows(8));
}
