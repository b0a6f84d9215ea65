// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/tensor.hpp"

#include <sstream>

#include "saicl/error.hpp"
#include "tensor_impl.hpp"

namespace saicl {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have rank >= 1");
  for (std::size_t e : shape)
    if (e == 0) throw ShapeError("tensor extents must be >= 1, got " + shape_string(shape));
}

const detail::TensorImpl& deref(const std::shared_ptr<detail::TensorImpl>& p) {
  if (!p) throw Error("use of an undefined tensor");
  return *p;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_shape(shape);
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != data.size())
    throw ShapeError("shape " + shape_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return deref(impl_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return deref(impl_).data.size(); }

std::span<const double> Tensor::data() const { return deref(impl_).data; }

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return deref(impl_).requires_grad; }

std::span<const double> Tensor::grad() const { return deref(impl_).grad; }

void Tensor::zero_grad() {
  deref(impl_);
  impl_->grad.clear();
}

std::span<double> Tensor::mutable_grad() {
  deref(impl_);
  return impl_->grad;
}

std::span<double> Tensor::mutable_data() {
  deref(impl_);
  return impl_->data;
}

Tensor Tensor::detach() const {
  return from(shape(), std::vector<double>(data().begin(), data().end()));
}

GradTape& GradTape::current() {
  thread_local GradTape tape;
  return tape;
}

std::vector<std::string> GradTape::op_names() const {
  std::vector<std::string> names;
  names.reserve(records_.size());
  for (const auto& r : records_) names.push_back(r.op);
  return names;
}

std::vector<Shape> GradTape::output_shapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(records_.size());
  for (const auto& r : records_) shapes.push_back(r.output->shape);
  return shapes;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward on an undefined tensor");
  if (loss.numel() != 1)
    throw ShapeError("backward requires a scalar loss, got shape " +
                     shape_string(loss.shape()));
  GradTape& tape = GradTape::current();
  if (tape.empty()) throw Error("backward called with an empty gradient tape");
  if (!loss.requires_grad())
    throw Error("loss does not depend on any tensor that requires grad");

  detail::impl(loss)->grad_buffer()[0] += 1.0;
  auto& records = tape.records_;
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward(it->output->grad);
  }
  tape.clear();
}

namespace detail {

namespace {
Tensor finish(Shape shape, std::vector<double> data, bool any_grad) {
  const bool track = any_grad && GradTape::current().enabled();
  return Tensor::from(std::move(shape), std::move(data), track);
}
}  // namespace

Tensor make_output(Shape shape, std::vector<double> data,
                   std::initializer_list<const Tensor*> inputs) {
  bool any = false;
  for (const Tensor* t : inputs) any = any || (t->defined() && t->requires_grad());
  return finish(std::move(shape), std::move(data), any);
}

Tensor make_output(Shape shape, std::vector<double> data,
                   std::span<const Tensor> inputs) {
  bool any = false;
  for (const Tensor& t : inputs) any = any || t.requires_grad();
  return finish(std::move(shape), std::move(data), any);
}

void record(const char* op, const Tensor& output,
            std::function<void(std::span<const double>)> backward) {
  Access::records(GradTape::current())
      .push_back({op, impl(output), std::move(backward)});
}

void accumulate(const ImplPtr& target, std::span<const double> values) {
  if (!target->requires_grad) return;
  auto& g = target->grad_buffer();
  for (std::size_t i = 0; i < values.size(); ++i) g[i] += values[i];
}

}  // namespace detail
}  // namespace saicl
