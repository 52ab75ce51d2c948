// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. The SIMD variants must reproduce these bit for bit.

#include "lhsynth/numkit/kernels.hpp"

namespace lhsynth::numkit::detail {
namespace {

template <class T>
void gemm_scalar(const GemmArgs<T>& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    const T* a_row = g.a + i * g.a_row_stride;
    T* c_row = g.c + i * g.ldc;
    for (std::size_t j = 0; j < g.n; ++j) {
      T acc = g.accumulate ? c_row[j] : T(0);
      for (std::size_t k = 0; k < g.k; ++k) {
        const T prod = a_row[k * g.a_col_stride] * g.b[k * g.ldb + j];
        acc = acc + prod;
      }
      c_row[j] = acc;
    }
  }
}

void masked_sgd_scalar(const MaskedSgdArgs& s) {
  for (std::size_t i = 0; i < s.n; ++i) {
    if (s.mask[i] != 0) {
      const double decayed = s.decay * s.w[i];
      const double step = s.lr * (s.g[i] + decayed);
      s.w[i] = s.w[i] - step;
    }
    s.g[i] = 0.0;
  }
}

void mask_apply_scalar(const double* w, const std::uint8_t* mask, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] != 0 ? w[i] : 0.0;
}

const KernelTable kScalar{Isa::kScalar, &gemm_scalar<double>, &gemm_scalar<float>,
                          &masked_sgd_scalar, &mask_apply_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace lhsynth::numkit::detail
