// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace lhsynth::numkit {

enum class Isa { kScalar, kAvx2, kAvx512 };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

// C[i, j] = (accumulate ? C[i, j] : 0) + sum_k A(i, k) * B[k, j]
//
// A is addressed through explicit strides so transposed operands need no
// copy: A(i, k) = a[i * a_row_stride + k * a_col_stride]. B and C are
// row-major with leading dimensions ldb / ldc. The sum for every output entry
// runs over k in ascending order, one rounded multiply then one rounded add
// per term.
template <class T>
struct GemmArgs {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  const T* a = nullptr;
  std::size_t a_row_stride = 0;
  std::size_t a_col_stride = 1;
  const T* b = nullptr;
  std::size_t ldb = 0;
  T* c = nullptr;
  std::size_t ldc = 0;
  bool accumulate = false;
};

// For every i with mask[i] != 0: w[i] -= lr * (g[i] + decay * w[i]).
// Entries with mask[i] == 0 keep their value. All g[i] are zeroed.
struct MaskedSgdArgs {
  double* w = nullptr;
  double* g = nullptr;
  const std::uint8_t* mask = nullptr;
  std::size_t n = 0;
  double lr = 0.0;
  double decay = 0.0;
};

struct KernelTable {
  Isa isa;
  void (*gemm_f64)(const GemmArgs<double>&);
  void (*gemm_f32)(const GemmArgs<float>&);
  void (*masked_sgd)(const MaskedSgdArgs&);
  // out[i] = mask[i] ? w[i] : 0
  void (*mask_apply)(const double* w, const std::uint8_t* mask, double* out, std::size_t n);
};

// Variants compiled into this binary and supported by the running CPU.
std::vector<Isa> available_isas();

// nullptr when the variant is not compiled in or not supported by the CPU.
const KernelTable* kernels_for(Isa isa);

// Active table. Chosen on first use: the widest supported ISA, unless the
// LHSYNTH_ISA environment variable names another available one.
const KernelTable& kernels();

// Overrides the active table; throws ContractViolation if unavailable.
void force_isa(Isa isa);

namespace detail {
const KernelTable& scalar_kernels();
const KernelTable* avx2_kernels();
const KernelTable* avx512_kernels();
}  // namespace detail

}  // namespace lhsynth::numkit
