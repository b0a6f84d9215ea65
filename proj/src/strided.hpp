// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "saicl/tensor.hpp"

namespace saicl::detail {

std::vector<std::size_t> row_major_strides(const Shape& shape);

// Copies `in` (shaped `shape`) into axis order `order`.
std::vector<double> permute_values(std::span<const double> in,
                                   const Shape& shape,
                                   std::span<const std::size_t> order);

Shape permuted_shape(const Shape& shape, std::span<const std::size_t> order);

// Strides of b viewed with a's shape, 0 on broadcast axes. Throws ShapeError
// if b does not broadcast to a.
std::vector<std::size_t> broadcast_strides(const Shape& a, const Shape& b);

// Calls fn(a_offset, b_offset, run_length, b_inner_stride) over contiguous
// runs along a's last axis.
template <class Fn>
void for_each_broadcast_run(const Shape& a, std::span<const std::size_t> bstr,
                            Fn&& fn) {
  const std::size_t rank = a.size();
  const std::size_t inner = a[rank - 1];
  const std::size_t inner_stride = bstr[rank - 1];
  const std::size_t runs = shape_numel(a) / inner;
  std::vector<std::size_t> idx(rank, 0);
  std::size_t boff = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    fn(r * inner, boff, inner, inner_stride);
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++idx[ax];
      boff += bstr[ax];
      if (idx[ax] < a[ax]) break;
      boff -= bstr[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
}

}  // namespace saicl::detail
