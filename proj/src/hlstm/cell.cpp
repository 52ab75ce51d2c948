// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/hlstm/cell.hpp"

#include <algorithm>
#include <cmath>

#include "lhsynth/common/error.hpp"

namespace lhsynth::hlstm {

using numkit::ActivationKind;

HLSTMCellParams::HLSTMCellParams(CellDims dims, ActivationKind hidden_activation)
    : dims_(dims), hidden_activation_(hidden_activation) {
  if (dims.input == 0 || dims.state == 0) {
    throw ContractViolation("HLSTMCellParams: input and state widths must be positive");
  }
  if (dims.hidden_depth != 0 && dims.hidden_depth != 1) {
    throw ContractViolation("HLSTMCellParams: hidden_depth must be 0 or 1");
  }
  if (dims.hidden_depth == 1 && dims.hidden == 0) {
    throw ContractViolation("HLSTMCellParams: hidden width must be positive at depth 1");
  }
  for (auto& g : gates_) {
    if (dims.hidden_depth == 1) {
      g.hidden = MaskedLinear(dims.hidden, dims.concat());
      g.output = MaskedLinear(dims.state, dims.hidden);
    } else {
      g.output = MaskedLinear(dims.state, dims.concat());
    }
  }
}

std::vector<MaskedLinear*> HLSTMCellParams::layers() {
  std::vector<MaskedLinear*> out;
  for (auto& g : gates_) {
    if (dims_.hidden_depth == 1) out.push_back(&g.hidden);
    out.push_back(&g.output);
  }
  return out;
}

std::vector<const MaskedLinear*> HLSTMCellParams::layers() const {
  std::vector<const MaskedLinear*> out;
  for (const auto& g : gates_) {
    if (dims_.hidden_depth == 1) out.push_back(&g.hidden);
    out.push_back(&g.output);
  }
  return out;
}

std::vector<std::string> HLSTMCellParams::layer_names(const std::string& prefix) const {
  std::vector<std::string> out;
  for (char g : kGateNames) {
    if (dims_.hidden_depth == 1) out.push_back(prefix + g + ".hidden");
    out.push_back(prefix + g + ".output");
  }
  return out;
}

namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NumericError(std::string("cell_forward: non-finite ") + what);
}

}  // namespace

HLSTMState cell_forward(const HLSTMCellParams& params, const Matrix& x, const HLSTMState& prev,
                        bool train, double dropout, numkit::SeededRng& rng, StepCache& cache) {
  const CellDims& d = params.dims();
  const std::size_t batch = x.rows();
  if (x.cols() != d.input || prev.h.rows() != batch || prev.h.cols() != d.state ||
      prev.c.rows() != batch || prev.c.cols() != d.state) {
    throw ContractViolation("cell_forward: x " + x.shape_string() + ", h " +
                            prev.h.shape_string() + ", c " + prev.c.shape_string() +
                            " do not match cell dims");
  }

  cache.consumed = false;
  cache.z.resize(batch, d.concat());
  for (std::size_t b = 0; b < batch; ++b) {
    auto zr = cache.z.row(b);
    std::copy(x.row(b).begin(), x.row(b).end(), zr.begin());
    std::copy(prev.h.row(b).begin(), prev.h.row(b).end(), zr.begin() + static_cast<std::ptrdiff_t>(d.input));
  }
  cache.c_prev = prev.c;

  const bool use_dropout = train && dropout > 0.0;
  const double keep_scale = use_dropout ? 1.0 / (1.0 - dropout) : 1.0;

  for (std::size_t gi = 0; gi < kNumGates; ++gi) {
    const GateParams& gp = params.gate(gi);
    GateCache& gc = cache.gates[gi];
    Matrix pre;
    if (d.hidden_depth == 1) {
      gp.hidden.forward(cache.z, gc.hidden_pre);
      gc.hidden_out.resize(batch, d.hidden);
      numkit::activation_forward(params.hidden_activation(), gc.hidden_pre.values(),
                                 gc.hidden_out.values());
      if (use_dropout) {
        gc.dropout.resize(batch, d.hidden);
        for (auto& m : gc.dropout.values()) m = rng.bernoulli(dropout) ? 0.0 : keep_scale;
        auto out = gc.hidden_out.values();
        const auto mask = gc.dropout.values();
        for (std::size_t k = 0; k < out.size(); ++k) out[k] *= mask[k];
      } else {
        gc.dropout = Matrix();
      }
      gp.output.forward(gc.hidden_out, pre);
    } else {
      gp.output.forward(cache.z, pre);
    }
    const auto kind = gi == static_cast<std::size_t>(Gate::kUpdate) ? ActivationKind::kTanh
                                                                     : ActivationKind::kSigmoid;
    gc.value.resize(batch, d.state);
    numkit::activation_forward(kind, pre.values(), gc.value.values());
  }

  const auto f = cache.gates[0].value.values();
  const auto i = cache.gates[1].value.values();
  const auto o = cache.gates[2].value.values();
  const auto g = cache.gates[3].value.values();
  const auto c_prev = cache.c_prev.values();

  HLSTMState next{Matrix(batch, d.state), Matrix(batch, d.state)};
  cache.tanh_c.resize(batch, d.state);
  auto c = next.c.values();
  auto h = next.h.values();
  auto tc = cache.tanh_c.values();
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = f[k] * c_prev[k] + i[k] * g[k];
    tc[k] = std::tanh(c[k]);
    h[k] = o[k] * tc[k];
  }
  check_finite(next.c, "cell state");
  check_finite(next.h, "hidden state");
  return next;
}

CellGrads cell_backward(HLSTMCellParams& params, StepCache& cache, const Matrix& dh,
                        const Matrix& dc_in) {
  if (cache.consumed) throw ContractViolation("cell_backward: step cache already consumed");
  const CellDims& d = params.dims();
  const std::size_t batch = cache.z.rows();
  if (dh.rows() != batch || dh.cols() != d.state || dc_in.rows() != batch ||
      dc_in.cols() != d.state) {
    throw ContractViolation("cell_backward: upstream gradient shape mismatch");
  }
  cache.consumed = true;

  const auto f = cache.gates[0].value.values();
  const auto i = cache.gates[1].value.values();
  const auto o = cache.gates[2].value.values();
  const auto g = cache.gates[3].value.values();
  const auto c_prev = cache.c_prev.values();
  const auto tc = cache.tanh_c.values();
  const auto dhv = dh.values();
  const auto dcv = dc_in.values();

  CellGrads out;
  out.dprev.c.resize(batch, d.state);
  std::array<Matrix, kNumGates> dpre;
  for (auto& m : dpre) m.resize(batch, d.state);
  auto dcp = out.dprev.c.values();
  for (std::size_t k = 0; k < dhv.size(); ++k) {
    const double dc = dcv[k] + dhv[k] * o[k] * (1.0 - tc[k] * tc[k]);
    const double d_o = dhv[k] * tc[k];
    const double d_f = dc * c_prev[k];
    const double d_i = dc * g[k];
    const double d_g = dc * i[k];
    dcp[k] = dc * f[k];
    dpre[0].values()[k] = d_f * f[k] * (1.0 - f[k]);
    dpre[1].values()[k] = d_i * i[k] * (1.0 - i[k]);
    dpre[2].values()[k] = d_o * o[k] * (1.0 - o[k]);
    dpre[3].values()[k] = d_g * (1.0 - g[k] * g[k]);
  }

  Matrix dz(batch, d.concat());
  Matrix dz_gate;
  for (std::size_t gi = 0; gi < kNumGates; ++gi) {
    GateParams& gp = params.gate(gi);
    GateCache& gc = cache.gates[gi];
    if (d.hidden_depth == 1) {
      Matrix dhid;
      gp.output.backward(gc.hidden_out, dpre[gi], &dhid);
      auto dv = dhid.values();
      if (!gc.dropout.empty()) {
        const auto mask = gc.dropout.values();
        for (std::size_t k = 0; k < dv.size(); ++k) dv[k] *= mask[k];
      }
      Matrix dhid_pre(batch, d.hidden);
      numkit::activation_backward(params.hidden_activation(), gc.hidden_pre.values(), dv,
                                  dhid_pre.values());
      gp.hidden.backward(cache.z, dhid_pre, &dz_gate);
    } else {
      gp.output.backward(cache.z, dpre[gi], &dz_gate);
    }
    auto acc = dz.values();
    const auto part = dz_gate.values();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += part[k];
  }

  out.dx.resize(batch, d.input);
  out.dprev.h.resize(batch, d.state);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto zr = dz.row(b);
    std::copy(zr.begin(), zr.begin() + static_cast<std::ptrdiff_t>(d.input), out.dx.row(b).begin());
    std::copy(zr.begin() + static_cast<std::ptrdiff_t>(d.input), zr.end(), out.dprev.h.row(b).begin());
  }
  return out;
}

}  // namespace lhsynth::hlstm
