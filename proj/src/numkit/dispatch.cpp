// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "lhsynth/common/error.hpp"
#include "lhsynth/numkit/kernels.hpp"

namespace lhsynth::numkit {
namespace detail {

#ifndef LHSYNTH_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#ifndef LHSYNTH_HAVE_AVX512
const KernelTable* avx512_kernels() { return nullptr; }
#endif

}  // namespace detail

namespace {

bool cpu_supports(Isa isa) {
#if defined(__x86_64__) || defined(__i386__)
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return __builtin_cpu_supports("avx2");
    case Isa::kAvx512:
      return __builtin_cpu_supports("avx512f");
  }
  return false;
#else
  return isa == Isa::kScalar;
#endif
}

const KernelTable* select_default() {
  if (const char* env = std::getenv("LHSYNTH_ISA"); env != nullptr && *env != '\0') {
    if (auto isa = parse_isa(env)) {
      if (const KernelTable* t = kernels_for(*isa)) return t;
    }
  }
  for (Isa isa : {Isa::kAvx512, Isa::kAvx2}) {
    if (const KernelTable* t = kernels_for(isa)) return t;
  }
  return &detail::scalar_kernels();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kAvx512:
      return "avx512";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "avx512") return Isa::kAvx512;
  return std::nullopt;
}

const KernelTable* kernels_for(Isa isa) {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::kScalar:
      return &detail::scalar_kernels();
    case Isa::kAvx2:
      return detail::avx2_kernels();
    case Isa::kAvx512:
      return detail::avx512_kernels();
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kAvx512}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable& kernels() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = select_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void force_isa(Isa isa) {
  const KernelTable* t = kernels_for(isa);
  if (t == nullptr) {
    throw ContractViolation("kernel variant '" + std::string(isa_name(isa)) +
                            "' is not available on this host");
  }
  g_active.store(t, std::memory_order_release);
}

}  // namespace lhsynth::numkit
