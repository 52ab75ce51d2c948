// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 only (no -mfma).

#include <immintrin.h>

#include <cstring>

#include "lhsynth/numkit/kernels.hpp"

namespace lhsynth::numkit::detail {
namespace {

struct VecF64 {
  using T = double;
  using Reg = __m256d;
  static constexpr std::size_t kWidth = 4;
  static Reg load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, Reg v) { _mm256_storeu_pd(p, v); }
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg set1(T x) { return _mm256_set1_pd(x); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
};

struct VecF32 {
  using T = float;
  using Reg = __m256;
  static constexpr std::size_t kWidth = 8;
  static Reg load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, Reg v) { _mm256_storeu_ps(p, v); }
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg set1(T x) { return _mm256_set1_ps(x); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
};

#include "kernels_simd.inl"

// Lane select from four mask bytes: all-ones where the byte is nonzero.
inline __m256d lane_select(const std::uint8_t* m) {
  std::int32_t packed;
  std::memcpy(&packed, m, sizeof(packed));
  const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
  const __m256i is_zero = _mm256_cmpeq_epi64(wide, _mm256_setzero_si256());
  return _mm256_castsi256_pd(_mm256_xor_si256(is_zero, _mm256_set1_epi64x(-1)));
}

void masked_sgd_avx2(const MaskedSgdArgs& s) {
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d decay = _mm256_set1_pd(s.decay);
  std::size_t i = 0;
  for (; i + 4 <= s.n; i += 4) {
    const __m256d w = _mm256_loadu_pd(s.w + i);
    const __m256d g = _mm256_loadu_pd(s.g + i);
    const __m256d decayed = _mm256_mul_pd(decay, w);
    const __m256d step = _mm256_mul_pd(lr, _mm256_add_pd(g, decayed));
    const __m256d updated = _mm256_sub_pd(w, step);
    _mm256_storeu_pd(s.w + i, _mm256_blendv_pd(w, updated, lane_select(s.mask + i)));
    _mm256_storeu_pd(s.g + i, _mm256_setzero_pd());
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

void mask_apply_avx2(const double* w, const std::uint8_t* mask, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_loadu_pd(w + i), lane_select(mask + i)));
  }
  for (; i < n; ++i) out[i] = mask[i] != 0 ? w[i] : 0.0;
}

const KernelTable kAvx2{Isa::kAvx2, &gemm_simd<VecF64>, &gemm_simd<VecF32>, &masked_sgd_avx2,
                        &mask_apply_avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2; }

}  // namespace lhsynth::numkit::detail
