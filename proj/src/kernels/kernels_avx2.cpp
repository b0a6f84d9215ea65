// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <iterator>
#include <limits>

#include "saicl/kernels.hpp"

namespace saicl::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four output columns per pass so each row of a is streamed once per quad.
void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t p, const double* a,
                  const double* b, double* c) {
  if (p < 4) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t q = 0; q < p; ++q) acc += a[i * p + q] * b[j * p + q];
        c[i * n + j] = acc;
      }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * p;
    double* out = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * p;
      const double* b1 = b0 + p;
      const double* b2 = b1 + p;
      const double* b3 = b2 + p;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      std::size_t q = 0;
      for (; q + 4 <= p; q += 4) {
        const __m256d va = _mm256_loadu_pd(row + q);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + q), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + q), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + q), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + q), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; q < p; ++q) {
        r0 += row[q] * b0[q];
        r1 += row[q] * b1[q];
        r2 += row[q] * b2[q];
        r3 += row[q] * b3[q];
      }
      out[j] = r0;
      out[j + 1] = r1;
      out[j + 2] = r2;
      out[j + 3] = r3;
    }
    for (; j < n; ++j) out[j] = dot_avx2(row, b + j * p, p);
  }
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_avx2(const double* a, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] * s;
}

double max_avx2(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_set1_pd(m);
    for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    for (double v : lanes) m = v > m ? v : m;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

// exp via 2^n * e^r, |r| <= ln2/2, degree-13 Taylor in Horner form. Inputs
// below -708 flush to zero instead of producing subnormals.
inline __m256d exp_pd(__m256d x) {
  const __m256d lower = _mm256_set1_pd(-708.0);
  const __m256d upper = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lower), upper);

  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
      1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
      1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
      1.0 / 24.0,         1.0 / 6.0,         1.0 / 2.0,
      1.0,                1.0};
  __m256d poly = _mm256_set1_pd(kInvFact[0]);
  for (std::size_t i = 1; i < std::size(kInvFact); ++i)
    poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(kInvFact[i]));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(poly, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

double exp_shift_sum_avx2(const double* x, double shift, double* out,
                          std::size_t n) {
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs));
    _mm256_storeu_pd(out + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  double sum = hsum(acc);
  if (i < n) {
    alignas(32) double tail_in[4] = {-1000.0, -1000.0, -1000.0, -1000.0};
    alignas(32) double tail_out[4];
    for (std::size_t t = 0; i + t < n; ++t) tail_in[t] = x[i + t] - shift;
    _mm256_store_pd(tail_out, exp_pd(_mm256_load_pd(tail_in)));
    for (std::size_t t = 0; i + t < n; ++t) {
      out[i + t] = tail_out[t];
      sum += tail_out[t];
    }
  }
  return sum;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2,   "avx2",       dot_avx2,
                                 axpy_avx2,   gemm_nt_avx2, add_avx2,
                                 mul_avx2,    scale_avx2,   max_avx2,
                                 exp_shift_sum_avx2};
  return table;
}

}  // namespace saicl::kernels
