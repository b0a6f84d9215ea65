// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "saicl/tensor.hpp"

namespace saicl::detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

using ImplPtr = std::shared_ptr<TensorImpl>;

struct Access {
  static const ImplPtr& impl(const Tensor& t) { return t.impl_; }
  static Tensor wrap(ImplPtr p) { return Tensor(std::move(p)); }
  static std::vector<GradTape::Record>& records(GradTape& tape) {
    return tape.records_;
  }
};

inline const ImplPtr& impl(const Tensor& t) { return Access::impl(t); }

// Builds an op result. The result tracks gradients when recording is on and
// any input does.
Tensor make_output(Shape shape, std::vector<double> data,
                   std::initializer_list<const Tensor*> inputs);
Tensor make_output(Shape shape, std::vector<double> data,
                   std::span<const Tensor> inputs);

void record(const char* op, const Tensor& output,
            std::function<void(std::span<const double>)> backward);

// grad(target) += values, if target tracks gradients.
void accumulate(const ImplPtr& target, std::span<const double> values);

}  // namespace saicl::detail
