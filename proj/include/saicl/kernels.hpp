// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop arithmetic used by the tensor ops. Every kernel has a portable
// scalar reference and, where the CPU supports it, an AVX2+FMA variant. The
// active table is chosen once at startup (SAICL_ISA=scalar forces the
// reference path) and can be switched explicitly by tests.
namespace saicl::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // c[i*n + j] = sum_q a[i*p + q] * b[j*p + q]   (row-major, b transposed)
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t p, const double* a,
                  const double* b, double* c);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(const double* a, double s, double* out, std::size_t n);
  double (*max)(const double* x, std::size_t n);
  // out[i] = exp(x[i] - shift); returns the sum of out.
  double (*exp_shift_sum)(const double* x, double shift, double* out,
                          std::size_t n);
};

const KernelTable& scalar_table();
#if defined(SAICL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

bool supported(Isa isa);
const KernelTable& table(Isa isa);
const KernelTable& active();
void select(Isa isa);
Isa detect();
std::string_view isa_name(Isa isa);

// Restores the previously active table on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active().isa) { select(isa); }
  ~ScopedIsa() { select(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t p,
                    const double* a, const double* b, double* c) {
  active().gemm_nt(m, n, p, a, b, c);
}

}  // namespace saicl::kernels
