// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "saicl/rng.hpp"
#include "saicl/tensor.hpp"

namespace saicl {

// A packed prompt of k demonstration segments followed by one test segment,
// each padded to segment_length tokens. Segment i occupies positions
// [i*L, (i+1)*L); the first valid_count(i) of them are real tokens.
class SegmentLayout {
 public:
  SegmentLayout(std::size_t segment_length, std::vector<std::size_t> valid_counts);

  // k full demonstrations of length L plus a full test segment.
  static SegmentLayout uniform(std::size_t k, std::size_t segment_length);

  std::size_t demos() const { return valid_.size() - 1; }
  std::size_t segments() const { return valid_.size(); }
  std::size_t segment_length() const { return length_; }
  std::size_t total_length() const { return valid_.size() * length_; }
  std::span<const std::size_t> valid_counts() const { return valid_; }
  std::size_t valid_count(std::size_t segment) const { return valid_.at(segment); }
  std::size_t test_segment() const { return demos(); }

  std::size_t segment_of(std::size_t pos) const { return pos / length_; }
  std::size_t offset_in_segment(std::size_t pos) const { return pos % length_; }
  bool is_padding(std::size_t pos) const {
    return offset_in_segment(pos) >= valid_[segment_of(pos)];
  }
  // One flag per position, true for real tokens.
  std::vector<bool> key_valid() const;

  bool operator==(const SegmentLayout&) const = default;

 private:
  std::size_t length_;
  std::vector<std::size_t> valid_;
};

// Additive attention mask: 0 where a query may attend to a key, the mask
// sentinel where it may not.
class AttentionMask {
 public:
  AttentionMask(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool allowed(std::size_t q, std::size_t k) const { return values_[q * cols_ + k] == 0.0; }
  void block(std::size_t q, std::size_t k);
  std::size_t allowed_count() const;
  std::span<const double> values() const { return values_; }
  Tensor to_tensor() const;

 private:
  std::size_t rows_, cols_;
  std::vector<double> values_;
};

// Demonstrations attend within themselves and to the test segment; the
// test segment attends everywhere; padding keys are blocked for all queries.
AttentionMask build_saicl_mask(const SegmentLayout& layout);
// Every query attends to every non-padding key.
AttentionMask build_full_mask(const SegmentLayout& layout);
// rows x key_valid.size(), blocking invalid keys.
AttentionMask build_key_padding_mask(std::size_t rows, const std::vector<bool>& key_valid);
// Lower-triangular mask for teacher-forced decoding.
AttentionMask build_causal_mask(std::size_t n);

struct BucketParams {
  int buckets = 32;
  int max_distance = 128;
  bool bidirectional = true;

  void validate() const;
  bool operator==(const BucketParams&) const = default;
};

// T5 relative-position bucket for delta = query_pos - key_pos. Offsets below
// half the (per-direction) bucket count get their own bucket, larger ones are
// log-spaced up to max_distance, beyond which they share the last bucket.
int relative_bucket(long delta, const BucketParams& params);

// Learned per-head bias indexed by relative-position bucket.
struct RelativeBiasTable {
  Tensor weights;  // [heads, buckets]
  BucketParams params;

  static RelativeBiasTable create(std::size_t heads, BucketParams params, Rng& rng,
                                  double init_std);
  std::size_t heads() const { return weights.dim(0); }
};

// [H, L, L] bias shared by every segment's diagonal block.
Tensor segment_bias_block(const RelativeBiasTable& table, std::size_t segment_length);

// [H, T, T] bias aligned with the layout's masks. Structured: the segment
// block on every diagonal block and exactly zero across segments.
// Unstructured: buckets from global positions over the packed sequence.
Tensor bias_for_layout(const RelativeBiasTable& table, const SegmentLayout& layout,
                       bool structured);

// [H, rows, cols] causal decoder bias from global positions.
Tensor positional_bias(const RelativeBiasTable& table, std::size_t rows, std::size_t cols);

// Reorders demonstration blocks of `values` along `axis`: output block i is
// input block perm[i]. The test block stays last. perm is 0-based over [0, k).
Tensor permute_segments(const SegmentLayout& layout, const Tensor& values,
                        std::span<const std::size_t> perm, std::size_t axis = 0);
SegmentLayout permute_layout(const SegmentLayout& layout,
                             std::span<const std::size_t> perm);
std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm);
void check_permutation(std::span<const std::size_t> perm, std::size_t k);

}  // namespace saicl
