// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "saicl/kernels.hpp"
#include "saicl/rng.hpp"

namespace saicl::kernels {
namespace {

std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -2.0,
                                  double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!supported(Isa::avx2)) GTEST_SKIP() << "AVX2 not available";
  }
  const KernelTable& ref = scalar_table();
  const KernelTable& simd = table(Isa::avx2);
  Rng rng{17};
};

TEST_F(KernelEquivalence, DotAndAxpyMatchAcrossTailLengths) {
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = random_values(n, rng);
    const auto b = random_values(n, rng);
    EXPECT_NEAR(ref.dot(a.data(), b.data(), n), simd.dot(a.data(), b.data(), n),
                1e-13 * (1.0 + n));
    auto y1 = random_values(n, rng);
    auto y2 = y1;
    ref.axpy(0.37, a.data(), y1.data(), n);
    simd.axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15);
  }
}

TEST_F(KernelEquivalence, GemmNtMatchesReference) {
  const std::size_t dims[][3] = {{1, 1, 1},  {3, 5, 2},   {4, 4, 4},  {7, 9, 16},
                                 {5, 13, 33}, {16, 3, 65}, {2, 17, 8}};
  for (const auto& d : dims) {
    const auto a = random_values(d[0] * d[2], rng);
    const auto b = random_values(d[1] * d[2], rng);
    std::vector<double> c1(d[0] * d[1]), c2(d[0] * d[1]);
    ref.gemm_nt(d[0], d[1], d[2], a.data(), b.data(), c1.data());
    simd.gemm_nt(d[0], d[1], d[2], a.data(), b.data(), c2.data());
    for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_NEAR(c1[i], c2[i], 1e-12);
  }
}

TEST_F(KernelEquivalence, ElementwiseAreExact) {
  for (std::size_t n : {1u, 3u, 4u, 9u, 31u}) {
    const auto a = random_values(n, rng);
    const auto b = random_values(n, rng);
    std::vector<double> o1(n), o2(n);
    ref.add(a.data(), b.data(), o1.data(), n);
    simd.add(a.data(), b.data(), o2.data(), n);
    EXPECT_EQ(o1, o2);
    ref.mul(a.data(), b.data(), o1.data(), n);
    simd.mul(a.data(), b.data(), o2.data(), n);
    EXPECT_EQ(o1, o2);
    ref.scale(a.data(), -1.5, o1.data(), n);
    simd.scale(a.data(), -1.5, o2.data(), n);
    EXPECT_EQ(o1, o2);
    EXPECT_EQ(ref.max(a.data(), n), simd.max(a.data(), n));
  }
}

TEST_F(KernelEquivalence, ExpShiftSumAgreesToRounding) {
  for (std::size_t n : {1u, 2u, 5u, 8u, 13u, 100u}) {
    auto x = random_values(n, rng, -60.0, 5.0);
    std::vector<double> o1(n), o2(n);
    const double s1 = ref.exp_shift_sum(x.data(), 5.0, o1.data(), n);
    const double s2 = simd.exp_shift_sum(x.data(), 5.0, o2.data(), n);
    EXPECT_NEAR(s1, s2, 1e-14 * s1);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(o1[i], o2[i], 4e-16 * o1[i] + 1e-300);
  }
}

TEST_F(KernelEquivalence, ExpFlushesMaskedEntriesToZero) {
  std::vector<double> x = {0.0, -1e9, -800.0, -1.0, -1e9};
  std::vector<double> out(x.size());
  const double s = simd.exp_shift_sum(x.data(), 0.0, out.data(), x.size());
  EXPECT_EQ(out[1], 0.0);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_EQ(out[4], 0.0);
  EXPECT_NEAR(s, 1.0 + std::exp(-1.0), 1e-15);
}

TEST(KernelDispatch, ScopedSelectionRestoresPrevious) {
  const Isa before = active().isa;
  {
    ScopedIsa guard(Isa::scalar);
    EXPECT_EQ(active().isa, Isa::scalar);
  }
  EXPECT_EQ(active().isa, before);
  EXPECT_TRUE(supported(Isa::scalar));
}

}  // namespace
}  // namespace saicl::kernels
