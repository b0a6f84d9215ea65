// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "saicl/rng.hpp"
#include "saicl/segment_layout.hpp"
#include "saicl/tensor.hpp"

namespace saicl {

enum class AttentionVariant { full, saicl };

std::string_view variant_name(AttentionVariant v);
AttentionVariant parse_variant(std::string_view name);

struct AttentionConfig {
  AttentionVariant variant = AttentionVariant::saicl;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  double dropout_rate = 0.0;

  // Throws if heads * head_dim != model_width or the dropout rate is invalid.
  void validate(std::size_t model_width) const;
};

// Optional post-softmax dropout. A null rng or zero rate disables it.
struct DropoutSpec {
  double rate = 0.0;
  Rng* rng = nullptr;
};

// Dense masked attention: softmax(q k^T + bias + mask) v per head, with no
// 1/sqrt(d) scaling. q is [H, Tq, d], k and v are [H, Tk, d]; mask is
// Tq x Tk; bias is [H, Tq, Tk] or undefined. Materializes every score.
Tensor full_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                      const AttentionMask& mask, const Tensor& bias,
                      DropoutSpec dropout = {});

// Block-structured attention over a segment layout. q, k, v are
// [H, (k+1)L, d]. Demonstration rows normalize over their own block
// concatenated with the test block; test rows normalize over the whole
// sequence. The within-segment relative bias (if a table is given) is added
// to diagonal blocks only. Score storage is (3k+1) L^2 per head.
Tensor saicl_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                       const SegmentLayout& layout, const RelativeBiasTable* table,
                       DropoutSpec dropout = {});

// Same block computation, returning the [H, T, T] attention weights scattered
// into dense form (blocked entries zero). For verification only.
Tensor saicl_attention_weights(const Tensor& q, const Tensor& k,
                               const SegmentLayout& layout,
                               const RelativeBiasTable* table);

struct ScoreStorage {
  std::size_t full;
  std::size_t saicl;
};

// Query-key scores each variant holds per head for k demonstrations of
// length L: ((k+1)L)^2 for full attention, (3k+1)L^2 for SAICL.
ScoreStorage score_storage(std::size_t k, std::size_t segment_length);

}  // namespace saicl
