// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "saicl/error.hpp"
#include "saicl/kernels.hpp"

namespace saicl::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(SAICL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  Isa isa = detect();
  if (const char* env = std::getenv("SAICL_ISA")) {
    if (std::string(env) == "scalar") isa = Isa::scalar;
  }
  return &table(isa);
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{initial_table()};
  return ptr;
}

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa detect() { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const KernelTable& table(Isa isa) {
  if (!supported(isa))
    throw Error("kernel ISA not supported on this CPU: " +
                std::string(isa_name(isa)));
#if defined(SAICL_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& active() {
  return *current().load(std::memory_order_acquire);
}

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace saicl::kernels
