// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "strided.hpp"

#include <algorithm>

#include "saicl/error.hpp"

namespace saicl::detail {

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;)
    strides[i - 1] = strides[i] * shape[i];
  return strides;
}

Shape permuted_shape(const Shape& shape, std::span<const std::size_t> order) {
  if (order.size() != shape.size())
    throw ShapeError("permutation rank " + std::to_string(order.size()) +
                     " does not match tensor rank " +
                     std::to_string(shape.size()));
  std::vector<bool> seen(shape.size(), false);
  Shape out(shape.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= shape.size() || seen[order[i]])
      throw ShapeError("invalid axis permutation");
    seen[order[i]] = true;
    out[i] = shape[order[i]];
  }
  return out;
}

std::vector<double> permute_values(std::span<const double> in,
                                   const Shape& shape,
                                   std::span<const std::size_t> order) {
  const Shape out_shape = permuted_shape(shape, order);
  const std::size_t rank = shape.size();
  bool identity = true;
  for (std::size_t i = 0; i < rank; ++i) identity = identity && order[i] == i;
  if (identity) return {in.begin(), in.end()};

  const auto in_strides = row_major_strides(shape);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) src_stride[i] = in_strides[order[i]];

  std::vector<double> out(in.size());
  const std::size_t inner = out_shape[rank - 1];
  const std::size_t inner_stride = src_stride[rank - 1];
  const std::size_t runs = in.size() / inner;
  std::vector<std::size_t> idx(rank, 0);
  std::size_t src = 0;
  double* dst = out.data();
  for (std::size_t r = 0; r < runs; ++r) {
    if (inner_stride == 1) {
      std::copy_n(in.data() + src, inner, dst);
    } else {
      for (std::size_t j = 0; j < inner; ++j) dst[j] = in[src + j * inner_stride];
    }
    dst += inner;
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++idx[ax];
      src += src_stride[ax];
      if (idx[ax] < out_shape[ax]) break;
      src -= src_stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

std::vector<std::size_t> broadcast_strides(const Shape& a, const Shape& b) {
  if (b.size() > a.size())
    throw ShapeError("cannot broadcast " + shape_string(b) + " to " +
                     shape_string(a));
  const auto bs = row_major_strides(b);
  std::vector<std::size_t> out(a.size(), 0);
  const std::size_t lead = a.size() - b.size();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::size_t ax = lead + i;
    if (b[i] == a[ax]) {
      out[ax] = b[i] == 1 ? 0 : bs[i];
    } else if (b[i] != 1) {
      throw ShapeError("cannot broadcast " + shape_string(b) + " to " +
                       shape_string(a) + " (axis " + std::to_string(ax) + ")");
    }
  }
  return out;
}

}  // namespace saicl::detail
