// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

// Register-blocked kernels shared by the SIMD translation units. Each TU
// defines the vector traits (VecF64 / VecF32) for its ISA and then includes
// this file inside its own anonymous namespace.
//
// Vectorization runs across output columns only; every lane performs the
// same k-ascending multiply-then-add sequence as the scalar reference.

template <class V, std::size_t R, std::size_t NV>
inline void gemm_micro(const GemmArgs<typename V::T>& g, std::size_t i, std::size_t j) {
  using T = typename V::T;
  typename V::Reg acc[R][NV];
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t v = 0; v < NV; ++v) {
      acc[r][v] = g.accumulate ? V::load(g.c + (i + r) * g.ldc + j + v * V::kWidth) : V::zero();
    }
  }
  const T* a0 = g.a + i * g.a_row_stride;
  for (std::size_t k = 0; k < g.k; ++k) {
    const T* b_row = g.b + k * g.ldb + j;
    typename V::Reg bv[NV];
    for (std::size_t v = 0; v < NV; ++v) bv[v] = V::load(b_row + v * V::kWidth);
    const T* a_k = a0 + k * g.a_col_stride;
    for (std::size_t r = 0; r < R; ++r) {
      const typename V::Reg av = V::set1(a_k[r * g.a_row_stride]);
      for (std::size_t v = 0; v < NV; ++v) acc[r][v] = V::add(acc[r][v], V::mul(av, bv[v]));
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t v = 0; v < NV; ++v) {
      V::store(g.c + (i + r) * g.ldc + j + v * V::kWidth, acc[r][v]);
    }
  }
}

template <class T>
inline void gemm_tail(const GemmArgs<T>& g, std::size_t i, std::size_t rows, std::size_t j0) {
  for (std::size_t r = i; r < i + rows; ++r) {
    const T* a_row = g.a + r * g.a_row_stride;
    T* c_row = g.c + r * g.ldc;
    for (std::size_t j = j0; j < g.n; ++j) {
      T acc = g.accumulate ? c_row[j] : T(0);
      for (std::size_t k = 0; k < g.k; ++k) {
        const T prod = a_row[k * g.a_col_stride] * g.b[k * g.ldb + j];
        acc = acc + prod;
      }
      c_row[j] = acc;
    }
  }
}

template <class V, std::size_t R>
inline void gemm_row_block(const GemmArgs<typename V::T>& g, std::size_t i) {
  constexpr std::size_t W = V::kWidth;
  std::size_t j = 0;
  for (; j + 2 * W <= g.n; j += 2 * W) gemm_micro<V, R, 2>(g, i, j);
  for (; j + W <= g.n; j += W) gemm_micro<V, R, 1>(g, i, j);
  if (j < g.n) gemm_tail(g, i, R, j);
}

template <class V>
void gemm_simd(const GemmArgs<typename V::T>& g) {
  constexpr std::size_t kRows = 4;
  std::size_t i = 0;
  for (; i + kRows <= g.m; i += kRows) gemm_row_block<V, kRows>(g, i);
  for (; i < g.m; ++i) gemm_row_block<V, 1>(g, i);
}
