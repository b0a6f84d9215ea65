// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "saicl/kernels.hpp"

namespace saicl::kernels {
namespace {

double dot_ref(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_ref(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt_ref(std::size_t m, std::size_t n, std::size_t p, const double* a,
                 const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * p;
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot_ref(row, b + j * p, p);
  }
}

void add_ref(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_ref(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_ref(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

double max_ref(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double exp_shift_sum_ref(const double* x, double shift, double* out,
                         std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(x[i] - shift);
    sum += out[i];
  }
  return sum;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, "scalar",    dot_ref,
                                 axpy_ref,    gemm_nt_ref, add_ref,
                                 mul_ref,     scale_ref,   max_ref,
                                 exp_shift_sum_ref};
  return table;
}

}  // namespace saicl::kernels
