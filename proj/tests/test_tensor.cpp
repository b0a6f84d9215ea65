// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "saicl/error.hpp"
#include "saicl/kernels.hpp"
#include "saicl/ops.hpp"

namespace saicl {
namespace {

using oracle::gradcheck;
using oracle::random_tensor;

TEST(Tensor, ConstructionChecksShape) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor::zeros({2, 0}), ShapeError);
  EXPECT_THROW(Tensor::zeros({}), ShapeError);
  const Tensor s = Tensor::scalar(3.5);
  EXPECT_EQ(s.shape(), Shape{1});
  EXPECT_EQ(s.item(), 3.5);
}

TEST(Backward, SumGivesOnes) {
  GradTape::current().clear();
  Tensor x = Tensor::from({2, 3}, {1, -2, 3, 4, 5, -6}, true);
  backward(sum(x));
  ASSERT_TRUE(x.has_grad());
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
  EXPECT_TRUE(GradTape::current().empty());
}

TEST(Backward, HalfSquaredNormGivesInput) {
  GradTape::current().clear();
  Rng rng(3);
  Tensor x = random_tensor({4, 5}, rng, 1.0, true);
  backward(scale(sum(mul(x, x)), 0.5));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(x.grad()[i], x[i], 1e-15);
}

TEST(Backward, RejectsNonScalarAndEmptyTape) {
  GradTape::current().clear();
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor y = scale(x, 2.0);
  EXPECT_THROW(backward(y), ShapeError);
  GradTape::current().clear();
  EXPECT_THROW(backward(Tensor::scalar(1.0, true)), Error);
}

TEST(Backward, TapeRecordsInExecutionOrder) {
  GradTape::current().clear();
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  Tensor loss = sum(relu(scale(x, 2.0)));
  EXPECT_EQ(GradTape::current().op_names(),
            (std::vector<std::string>{"scale", "relu", "sum"}));
  backward(loss);
  EXPECT_EQ(GradTape::current().size(), 0u);
}

TEST(Backward, NoGradGuardSuppressesRecording) {
  GradTape::current().clear();
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  {
    NoGradGuard guard;
    Tensor y = sum(x);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(GradTape::current().empty());
}

TEST(Backward, GradientsAccumulateAcrossUses) {
  GradTape::current().clear();
  Tensor x = Tensor::from({2}, {1.5, -2.0}, true);
  backward(sum(add(x, x)));
  for (double g : x.grad()) EXPECT_EQ(g, 2.0);
  x.zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(Softmax, UniformRow) {
  const Tensor y = softmax_last(Tensor::from({3}, {0, 0, 0}));
  for (double v : y.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesDirectExponentialSum) {
  const Tensor y = softmax_last(Tensor::from({3}, {1, 2, 3}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(y[0], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(y[1], std::exp(2.0) / z, 1e-12);
  EXPECT_NEAR(y[2], std::exp(3.0) / z, 1e-12);
}

TEST(Softmax, ShiftInvariantAndRowStochastic) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({3, 7}, rng, 3.0);
    const double c = 10.0 * rng.normal();
    const Tensor shifted = add(x, Tensor::scalar(c));
    const Tensor a = softmax_last(x);
    const Tensor b = softmax_last(shifted);
    EXPECT_LE(oracle::max_abs_diff(a.data(), b.data()), 1e-12);
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 7; ++j) s += a[r * 7 + j];
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, MaskedEntriesAndRows) {
  const Tensor y = softmax_last(
      Tensor::from({2, 3}, {0.0, kMaskSentinel, 0.0, kMaskSentinel, kMaskSentinel,
                            kMaskSentinel}));
  EXPECT_NEAR(y[0], 0.5, 1e-15);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_NEAR(y[2], 0.5, 1e-15);
  for (std::size_t j = 3; j < 6; ++j) EXPECT_EQ(y[j], 0.0);
}

TEST(Softmax, RejectsNaN) {
  EXPECT_THROW(softmax_last(Tensor::from({2}, {0.0, std::nan("")})), NumericError);
}

TEST(Ops, BroadcastAddAndMul) {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor row = Tensor::from({3}, {10, 20, 30});
  const Tensor col = Tensor::from({2, 1}, {100, 200});
  const Tensor r = add(a, row);
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()),
            (std::vector<double>{11, 22, 33, 14, 25, 36}));
  const Tensor c = mul(a, col);
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()),
            (std::vector<double>{100, 200, 300, 800, 1000, 1200}));
  EXPECT_THROW(add(a, Tensor::zeros({2})), ShapeError);
}

TEST(Ops, ConcatSliceRoundTrip) {
  Rng rng(5);
  const Tensor x = random_tensor({2, 5, 3}, rng);
  const Tensor left = slice(x, 1, 0, 2);
  const Tensor right = slice(x, 1, 2, 3);
  const Tensor parts[] = {left, right};
  const Tensor back = concat(parts, 1);
  EXPECT_EQ(back.shape(), x.shape());
  EXPECT_EQ(oracle::max_abs_diff(back.data(), x.data()), 0.0);
  EXPECT_THROW(slice(x, 1, 4, 2), ShapeError);
}

TEST(Ops, PermuteInverse) {
  Rng rng(6);
  const Tensor x = random_tensor({2, 3, 4}, rng);
  const std::size_t order[] = {2, 0, 1};
  const std::size_t inverse[] = {1, 2, 0};
  const Tensor y = permute(x, order);
  EXPECT_EQ(y.shape(), (Shape{4, 2, 3}));
  EXPECT_EQ(y[1 * 6 + 1 * 3 + 2], x[1 * 12 + 2 * 4 + 1]);
  EXPECT_EQ(oracle::max_abs_diff(permute(y, inverse).data(), x.data()), 0.0);
}

TEST(Ops, EmbeddingRejectsOutOfVocabulary) {
  const Tensor table = Tensor::zeros({4, 2});
  const int ids[] = {0, 4};
  EXPECT_THROW(embedding(table, ids), ShapeError);
}

TEST(Ops, NllGatherPicksTargets) {
  const Tensor lp = Tensor::from({2, 3}, {-1, -2, -3, -4, -5, -6});
  const int targets[] = {2, 0};
  EXPECT_EQ(nll_gather(lp, targets).item(), 7.0);
}

// Finite-difference checks: every differentiable op on 50 seeds.
class GradientCheck : public ::testing::TestWithParam<int> {
 protected:
  Rng rng{static_cast<std::uint64_t>(1000 + GetParam())};
  static constexpr double kTol = 1e-4;
};

TEST_P(GradientCheck, Elementwise) {
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({3, 4}, rng);
  const Tensor row = random_tensor({4}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  auto weighted = [&](const Tensor& t) { return sum(mul(t, w)); };
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(add(x[0], x[1])); }, {a, b}), kTol);
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(mul(x[0], x[1])); }, {a, b}), kTol);
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(add(x[0], x[1])); }, {a, row}), kTol);
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(mul(x[0], x[1])); }, {a, row}), kTol);
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(scale(x[0], -0.7)); }, {a}), kTol);
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(relu(x[0])); }, {a}), kTol);
  const Tensor pos = Tensor::from(a.shape(), [&] {
    std::vector<double> v(a.numel());
    for (double& x : v) x = 0.5 + rng.uniform();
    return v;
  }());
  EXPECT_LE(gradcheck([&](const auto& x) { return weighted(log(x[0])); }, {pos}), kTol);
}

TEST_P(GradientCheck, SoftmaxAndNormalization) {
  const Tensor x = random_tensor({2, 3, 5}, rng);
  const Tensor w = random_tensor({2, 3, 5}, rng);
  const Tensor g = random_tensor({5}, rng);
  const Tensor b = random_tensor({5}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(softmax_last(v[0]), w)); }, {x}), kTol);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(log_softmax_last(v[0]), w)); }, {x}), kTol);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(layer_norm(v[0], v[1], v[2]), w)); },
                      {x, g, b}),
            kTol);
}

TEST_P(GradientCheck, StructuralOps) {
  const Tensor x = random_tensor({2, 4, 3}, rng);
  const Tensor y = random_tensor({2, 2, 3}, rng);
  const Tensor wcat = random_tensor({2, 6, 3}, rng);
  EXPECT_LE(gradcheck(
                [&](const auto& v) {
                  const Tensor parts[] = {v[0], v[1]};
                  return sum(mul(concat(parts, 1), wcat));
                },
                {x, y}),
            kTol);
  const Tensor wsl = random_tensor({2, 2, 3}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(slice(v[0], 1, 1, 2), wsl)); }, {x}), kTol);
  const Tensor wperm = random_tensor({3, 2, 4}, rng);
  const std::size_t order[] = {2, 0, 1};
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(permute(v[0], order), wperm)); }, {x}), kTol);
  const Tensor wre = random_tensor({8, 3}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(reshape(v[0], {8, 3}), wre)); }, {x}), kTol);
}

TEST_P(GradientCheck, GatherOps) {
  const Tensor table = random_tensor({6, 3}, rng);
  const int ids[] = {1, 5, 1, 0};
  const Tensor wemb = random_tensor({4, 3}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(embedding(v[0], ids), wemb)); }, {table}),
            kTol);
  const Tensor bias = random_tensor({2, 5}, rng);
  const int cols[] = {0, 4, -1, 2, 2, -1};
  const Tensor wg = random_tensor({2, 2, 3}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(gather_columns(v[0], cols, {2, 3}), wg)); },
                      {bias}),
            kTol);
  const Tensor logits = random_tensor({3, 5}, rng);
  const int targets[] = {4, 0, 2};
  EXPECT_LE(gradcheck([&](const auto& v) { return nll_gather(log_softmax_last(v[0]), targets); },
                      {logits}),
            kTol);
}

TEST_P(GradientCheck, Contract) {
  const Tensor q = random_tensor({2, 2, 3, 4}, rng);
  const Tensor k = random_tensor({2, 2, 3, 4}, rng);
  const Tensor w = random_tensor({2, 2, 3, 3}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(contract("bhtd,bhrd->bhtr", v[0], v[1]), w)); },
                      {q, k}),
            kTol);
}

TEST_P(GradientCheck, ThreeLayerComposition) {
  const Tensor x = random_tensor({4, 5}, rng);
  const Tensor w1 = random_tensor({5, 6}, rng, 0.5);
  const Tensor w2 = random_tensor({6, 3}, rng, 0.5);
  const Tensor b = random_tensor({6}, rng);
  const Tensor target = random_tensor({4, 3}, rng);
  EXPECT_LE(gradcheck(
                [&](const auto& v) {
                  const Tensor h = softmax_last(add(contract("ij,jk->ik", v[0], v[1]), v[3]));
                  const Tensor o = softmax_last(contract("ij,jk->ik", h, v[2]));
                  return sum(mul(o, target));
                },
                {x, w1, w2, b}),
            kTol);
}

INSTANTIATE_TEST_SUITE_P(FiftySeeds, GradientCheck, ::testing::Range(0, 50));

TEST(GradientCheck, ScalarKernelsAgree) {
  kernels::ScopedIsa scalar(kernels::Isa::scalar);
  Rng rng(99);
  const Tensor q = random_tensor({3, 4}, rng);
  const Tensor k = random_tensor({5, 4}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  EXPECT_LE(gradcheck([&](const auto& v) { return sum(mul(softmax_last(contract("td,rd->tr", v[0], v[1])), w)); },
                      {q, k}),
            1e-4);
}

}  // namespace
}  // namespace saicl
