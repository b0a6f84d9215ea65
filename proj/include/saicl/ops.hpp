// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "saicl/rng.hpp"
#include "saicl/tensor.hpp"

// Differentiable operations. Each returns a new tensor and, when an input
// tracks gradients and recording is enabled, appends itself to the thread's
// GradTape.
namespace saicl {

// Additive mask value for blocked attention pairs.
inline constexpr double kMaskSentinel = -1e9;

// Einstein summation over two operands, e.g. "bhtd,bhrd->bhtr". Every axis
// must appear in the output or in both operands.
Tensor contract(std::string_view spec, const Tensor& a, const Tensor& b);

// Elementwise a + b / a * b; b must broadcast to a's shape (right-aligned,
// each extent equal or 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sum(const Tensor& a);

// Softmax over the last axis. Rows in which every entry is at or below half
// the mask sentinel produce zeros. Throws NumericError on NaN input.
Tensor softmax_last(const Tensor& x);
Tensor log_softmax_last(const Tensor& x);

// Normalizes over the last axis, then applies gain and bias (both shaped
// like the last axis).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-6);

// Rows of table[V, D] selected by ids -> [ids.size(), D].
Tensor embedding(const Tensor& table, std::span<const int> ids);

// Gathers columns of table[H, B]: out[h, n] = table[h, index[n]], or 0 where
// index[n] < 0. Result shape is {H} followed by out_shape.
Tensor gather_columns(const Tensor& table, std::span<const int> index,
                      const Shape& out_shape);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length);
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, std::span<const std::size_t> order);

// -sum_i log_probs[i, targets[i]] for log_probs of shape [n, V].
Tensor nll_gather(const Tensor& log_probs, std::span<const int> targets);

// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  return contract("ij,jk->ik", a, b);
}

}  // namespace saicl
