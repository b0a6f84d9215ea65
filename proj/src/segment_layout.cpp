// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/segment_layout.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "saicl/error.hpp"
#include "saicl/ops.hpp"

namespace saicl {

SegmentLayout::SegmentLayout(std::size_t segment_length,
                             std::vector<std::size_t> valid_counts)
    : length_(segment_length), valid_(std::move(valid_counts)) {
  if (length_ == 0) throw LayoutError("segment length must be >= 1");
  if (valid_.empty()) throw LayoutError("layout needs at least the test segment");
  for (std::size_t i = 0; i < valid_.size(); ++i)
    if (valid_[i] == 0 || valid_[i] > length_)
      throw LayoutError("segment " + std::to_string(i) + " has " +
                        std::to_string(valid_[i]) + " valid tokens, expected [1, " +
                        std::to_string(length_) + "]");
}

SegmentLayout SegmentLayout::uniform(std::size_t k, std::size_t segment_length) {
  return SegmentLayout(segment_length, std::vector<std::size_t>(k + 1, segment_length));
}

std::vector<bool> SegmentLayout::key_valid() const {
  std::vector<bool> valid(total_length());
  for (std::size_t p = 0; p < valid.size(); ++p) valid[p] = !is_padding(p);
  return valid;
}

AttentionMask::AttentionMask(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

void AttentionMask::block(std::size_t q, std::size_t k) {
  values_[q * cols_ + k] = kMaskSentinel;
}

std::size_t AttentionMask::allowed_count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 0.0));
}

Tensor AttentionMask::to_tensor() const { return Tensor::from({rows_, cols_}, values_); }

AttentionMask build_saicl_mask(const SegmentLayout& layout) {
  const std::size_t n = layout.total_length();
  const std::size_t test = layout.test_segment();
  AttentionMask mask(n, n);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t sq = layout.segment_of(q);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t sk = layout.segment_of(k);
      const bool linked = sq == sk || sq == test || sk == test;
      if (!linked || layout.is_padding(k)) mask.block(q, k);
    }
  }
  return mask;
}

AttentionMask build_full_mask(const SegmentLayout& layout) {
  return build_key_padding_mask(layout.total_length(), layout.key_valid());
}

AttentionMask build_key_padding_mask(std::size_t rows, const std::vector<bool>& key_valid) {
  AttentionMask mask(rows, key_valid.size());
  for (std::size_t q = 0; q < rows; ++q)
    for (std::size_t k = 0; k < key_valid.size(); ++k)
      if (!key_valid[k]) mask.block(q, k);
  return mask;
}

AttentionMask build_causal_mask(std::size_t n) {
  AttentionMask mask(n, n);
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t k = q + 1; k < n; ++k) mask.block(q, k);
  return mask;
}

void BucketParams::validate() const {
  if (buckets < 2) throw LayoutError("relative bias needs at least 2 buckets");
  if (bidirectional && buckets % 2 != 0)
    throw LayoutError("bidirectional bucket count must be even");
  if (max_distance <= buckets / 2)
    throw LayoutError("max_distance must exceed half the bucket count");
}

int relative_bucket(long delta, const BucketParams& params) {
  int num = params.buckets;
  int bucket = 0;
  long n = delta;
  if (params.bidirectional) {
    num /= 2;
    if (n < 0) bucket += num;
    n = std::labs(n);
  } else {
    n = std::max(n, 0L);
  }
  const int max_exact = num / 2;
  if (n < max_exact) return bucket + static_cast<int>(n);
  // The epsilon keeps exact powers of the log base on their own boundary.
  const double scaled = std::log(static_cast<double>(n) / max_exact) /
                        std::log(static_cast<double>(params.max_distance) / max_exact) *
                        (num - max_exact);
  const int large = max_exact + static_cast<int>(scaled + 1e-9);
  return bucket + std::min(large, num - 1);
}

RelativeBiasTable RelativeBiasTable::create(std::size_t heads, BucketParams params,
                                            Rng& rng, double init_std) {
  params.validate();
  std::vector<double> w(heads * static_cast<std::size_t>(params.buckets));
  for (double& v : w) v = init_std * rng.normal();
  return {Tensor::from({heads, static_cast<std::size_t>(params.buckets)}, std::move(w), true),
          params};
}

namespace {

Tensor bias_from_offsets(const RelativeBiasTable& table, std::size_t rows, std::size_t cols,
                         const std::function<int(std::size_t, std::size_t)>& bucket_of) {
  std::vector<int> index(rows * cols);
  for (std::size_t q = 0; q < rows; ++q)
    for (std::size_t k = 0; k < cols; ++k) index[q * cols + k] = bucket_of(q, k);
  return gather_columns(table.weights, index, {rows, cols});
}

}  // namespace

Tensor segment_bias_block(const RelativeBiasTable& table, std::size_t segment_length) {
  return bias_from_offsets(table, segment_length, segment_length,
                           [&](std::size_t q, std::size_t k) {
                             return relative_bucket(static_cast<long>(q) - static_cast<long>(k),
                                                    table.params);
                           });
}

Tensor bias_for_layout(const RelativeBiasTable& table, const SegmentLayout& layout,
                       bool structured) {
  const std::size_t n = layout.total_length();
  if (!structured) return positional_bias(table, n, n);
  return bias_from_offsets(table, n, n, [&](std::size_t q, std::size_t k) {
    if (layout.segment_of(q) != layout.segment_of(k)) return -1;
    return relative_bucket(static_cast<long>(layout.offset_in_segment(q)) -
                               static_cast<long>(layout.offset_in_segment(k)),
                           table.params);
  });
}

Tensor positional_bias(const RelativeBiasTable& table, std::size_t rows, std::size_t cols) {
  return bias_from_offsets(table, rows, cols, [&](std::size_t q, std::size_t k) {
    return relative_bucket(static_cast<long>(q) - static_cast<long>(k), table.params);
  });
}

void check_permutation(std::span<const std::size_t> perm, std::size_t k) {
  if (perm.size() != k)
    throw LayoutError("permutation has " + std::to_string(perm.size()) +
                      " entries for " + std::to_string(k) + " demonstrations");
  std::vector<bool> seen(k, false);
  for (std::size_t p : perm) {
    if (p >= k || seen[p]) throw LayoutError("invalid demonstration permutation");
    seen[p] = true;
  }
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

Tensor permute_segments(const SegmentLayout& layout, const Tensor& values,
                        std::span<const std::size_t> perm, std::size_t axis) {
  check_permutation(perm, layout.demos());
  if (values.dim(axis) != layout.total_length())
    throw ShapeError("permute_segments: axis " + std::to_string(axis) + " has extent " +
                     std::to_string(values.dim(axis)) + ", layout has " +
                     std::to_string(layout.total_length()) + " positions");
  const std::size_t L = layout.segment_length();
  std::vector<Tensor> blocks;
  blocks.reserve(layout.segments());
  for (std::size_t p : perm) blocks.push_back(slice(values, axis, p * L, L));
  blocks.push_back(slice(values, axis, layout.test_segment() * L, L));
  return concat(blocks, axis);
}

SegmentLayout permute_layout(const SegmentLayout& layout, std::span<const std::size_t> perm) {
  check_permutation(perm, layout.demos());
  std::vector<std::size_t> valid;
  for (std::size_t p : perm) valid.push_back(layout.valid_count(p));
  valid.push_back(layout.valid_count(layout.test_segment()));
  return SegmentLayout(layout.segment_length(), std::move(valid));
}

}  // namespace saicl
