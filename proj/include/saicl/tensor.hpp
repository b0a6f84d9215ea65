// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace saicl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct TensorImpl;
struct Access;
}

// Dense row-major array of doubles. Copies of a Tensor share storage; every
// op produces a fresh tensor, so values are never aliased between op inputs
// and outputs. Rank-0 values are represented with shape {1}.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  std::span<const double> data() const;
  double operator[](std::size_t flat) const { return data()[flat]; }
  double item() const;
  bool requires_grad() const;

  // Accumulated gradient; empty until a backward pass reaches this tensor.
  std::span<const double> grad() const;
  bool has_grad() const { return !grad().empty(); }
  void zero_grad();
  // In-place access to the accumulated gradient (clipping).
  std::span<double> mutable_grad();

  // Direct write access for leaves (optimizer updates, checkpoint loads).
  // Must not be used on a tensor that is referenced by a live tape.
  std::span<double> mutable_data();

  // Same values, no gradient tracking.
  Tensor detach() const;

  const detail::TensorImpl* id() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}

  std::shared_ptr<detail::TensorImpl> impl_;

  friend struct detail::Access;
};

// Records differentiable operations in execution order for one thread.
// backward() replays the records in reverse, which is a reverse topological
// order because every record's inputs were produced before it.
class GradTape {
 public:
  struct Record {
    std::string op;
    std::shared_ptr<detail::TensorImpl> output;
    std::function<void(std::span<const double> grad_output)> backward;
  };

  static GradTape& current();

  bool enabled() const { return enabled_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::vector<std::string> op_names() const;
  std::vector<Shape> output_shapes() const;
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
  bool enabled_ = true;

  friend class NoGradGuard;
  friend struct detail::Access;
  friend void backward(const Tensor& loss);
};

// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradTape::current().enabled_) {
    GradTape::current().enabled_ = false;
  }
  ~NoGradGuard() { GradTape::current().enabled_ = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Seeds d(loss)/d(loss) = 1, propagates through the tape and clears it.
void backward(const Tensor& loss);

}  // namespace saicl
