// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx512f. FMA instructions are available here, so the
// -ffp-contract=off project flag is what keeps results identical to scalar.

#include <immintrin.h>

#include "lhsynth/numkit/kernels.hpp"

namespace lhsynth::numkit::detail {
namespace {

struct VecF64 {
  using T = double;
  using Reg = __m512d;
  static constexpr std::size_t kWidth = 8;
  static Reg load(const T* p) { return _mm512_loadu_pd(p); }
  static void store(T* p, Reg v) { _mm512_storeu_pd(p, v); }
  static Reg zero() { return _mm512_setzero_pd(); }
  static Reg set1(T x) { return _mm512_set1_pd(x); }
  static Reg add(Reg a, Reg b) { return _mm512_add_pd(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm512_mul_pd(a, b); }
};

struct VecF32 {
  using T = float;
  using Reg = __m512;
  static constexpr std::size_t kWidth = 16;
  static Reg load(const T* p) { return _mm512_loadu_ps(p); }
  static void store(T* p, Reg v) { _mm512_storeu_ps(p, v); }
  static Reg zero() { return _mm512_setzero_ps(); }
  static Reg set1(T x) { return _mm512_set1_ps(x); }
  static Reg add(Reg a, Reg b) { return _mm512_add_ps(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm512_mul_ps(a, b); }
};

#include "kernels_simd.inl"

inline __mmask8 lane_select(const std::uint8_t* m) {
  const __m512i wide = _mm512_cvtepu8_epi64(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(m)));
  return _mm512_test_epi64_mask(wide, wide);
}

void masked_sgd_avx512(const MaskedSgdArgs& s) {
  const __m512d lr = _mm512_set1_pd(s.lr);
  const __m512d decay = _mm512_set1_pd(s.decay);
  std::size_t i = 0;
  for (; i + 8 <= s.n; i += 8) {
    const __m512d w = _mm512_loadu_pd(s.w + i);
    const __m512d g = _mm512_loadu_pd(s.g + i);
    const __m512d decayed = _mm512_mul_pd(decay, w);
    const __m512d step = _mm512_mul_pd(lr, _mm512_add_pd(g, decayed));
    const __m512d updated = _mm512_sub_pd(w, step);
    _mm512_storeu_pd(s.w + i, _mm512_mask_blend_pd(lane_select(s.mask + i), w, updated));
    _mm512_storeu_pd(s.g + i, _mm512_setzero_pd());
  }
  for (; i < s.n; ++i) {
    if (s.mask[i] != 0) {
      const double decayed = s.decay * s.w[i];
      const double step = s.lr * (s.g[i] + decayed);
      s.w[i] = s.w[i] - step;
    }
    s.g[i] = 0.0;
  }
}

void mask_apply_avx512(const double* w, const std::uint8_t* mask, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm512_storeu_pd(out + i, _mm512_maskz_mov_pd(lane_select(mask + i), _mm512_loadu_pd(w + i)));
  }
  for (; i < n; ++i) out[i] = mask[i] != 0 ? w[i] : 0.0;
}

const KernelTable kAvx512{Isa::kAvx512, &gemm_simd<VecF64>, &gemm_simd<VecF32>,
                          &masked_sgd_avx512, &mask_apply_avx512};

}  // namespace

const KernelTable* avx512_kernels() { return &kAvx512; }

}  // namespace lhsynth::numkit::detail
