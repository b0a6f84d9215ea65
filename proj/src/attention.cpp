// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "saicl/error.hpp"
#include "saicl/kernels.hpp"
#include "saicl/ops.hpp"

namespace saicl {

std::string_view variant_name(AttentionVariant v) {
  return v == AttentionVariant::full ? "full" : "saicl";
}

AttentionVariant parse_variant(std::string_view name) {
  if (name == "full") return AttentionVariant::full;
  if (name == "saicl") return AttentionVariant::saicl;
  throw Error("unknown attention variant '" + std::string(name) + "'");
}

void AttentionConfig::validate(std::size_t model_width) const {
  if (heads == 0 || head_dim == 0) throw ShapeError("attention needs heads, head_dim >= 1");
  if (heads * head_dim != model_width)
    throw ShapeError("heads * head_dim = " + std::to_string(heads * head_dim) +
                     " does not equal model width " + std::to_string(model_width));
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw Error("attention dropout rate must be in [0, 1)");
}

namespace {

Tensor maybe_dropout(const Tensor& probs, DropoutSpec spec) {
  if (spec.rng == nullptr || spec.rate == 0.0) return probs;
  return dropout(probs, spec.rate, *spec.rng);
}

void check_qkv(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3)
    throw ShapeError("attention expects [H, T, d] inputs");
  if (q.dim(0) != k.dim(0) || q.dim(0) != v.dim(0) || q.dim(2) != k.dim(2) ||
      k.dim(1) != v.dim(1))
    throw ShapeError("attention input shapes disagree: q " + shape_string(q.shape()) +
                     ", k " + shape_string(k.shape()) + ", v " + shape_string(v.shape()));
}

// Additive key mask per segment, shaped [1, S, 1, L].
Tensor segment_key_mask(const SegmentLayout& layout, std::size_t first, std::size_t count) {
  const std::size_t L = layout.segment_length();
  std::vector<double> m(count * L, 0.0);
  for (std::size_t s = 0; s < count; ++s)
    for (std::size_t t = layout.valid_count(first + s); t < L; ++t) m[s * L + t] = kMaskSentinel;
  return Tensor::from({1, count, 1, L}, std::move(m));
}

struct BlockProbabilities {
  // [H, k, L, 2L]: demonstration rows over [own block | test block].
  Tensor demo_rows;
  // [H, L, (k+1)L]: test rows over the whole sequence.
  Tensor test_rows;
};

BlockProbabilities block_probabilities(const Tensor& q5, const Tensor& k5,
                                       const SegmentLayout& layout,
                                       const RelativeBiasTable* table) {
  const std::size_t H = q5.dim(0);
  const std::size_t S = layout.segments();
  const std::size_t K = layout.demos();
  const std::size_t L = layout.segment_length();

  Tensor diag = contract("hstd,hsrd->hstr", q5, k5);
  if (table != nullptr) diag = add(diag, reshape(segment_bias_block(*table, L), {H, 1, L, L}));
  diag = add(diag, segment_key_mask(layout, 0, S));

  BlockProbabilities out;
  if (K == 0) {
    out.test_rows = softmax_last(reshape(diag, {H, L, L}));
    return out;
  }

  const Tensor q_demo = slice(q5, 1, 0, K);
  const Tensor k_demo = slice(k5, 1, 0, K);
  const Tensor q_test = reshape(slice(q5, 1, K, 1), {H, L, q5.dim(3)});
  const Tensor k_test = reshape(slice(k5, 1, K, 1), {H, L, k5.dim(3)});

  const Tensor global_key =
      add(contract("hstd,hrd->hstr", q_demo, k_test), segment_key_mask(layout, K, 1));
  const Tensor global_query =
      add(contract("htd,hsrd->hstr", q_test, k_demo), segment_key_mask(layout, 0, K));

  const Tensor demo_parts[] = {slice(diag, 1, 0, K), global_key};
  out.demo_rows = softmax_last(concat(demo_parts, 3));

  const Tensor test_parts[] = {global_query, slice(diag, 1, K, 1)};
  const std::size_t to_rows[] = {0, 2, 1, 3};
  out.test_rows =
      softmax_last(reshape(permute(concat(test_parts, 1), to_rows), {H, L, S * L}));
  return out;
}

// Softmax of one score row in place, with the same masked-row and NaN rules
// as softmax_last.
void softmax_row(double* row, std::size_t n, const kernels::KernelTable& ks) {
  for (std::size_t j = 0; j < n; ++j)
    if (std::isnan(row[j])) throw NumericError("softmax_last: NaN input");
  const double m = ks.max(row, n);
  if (m <= kMaskSentinel / 2) {
    std::fill(row, row + n, 0.0);
    return;
  }
  const double total = ks.exp_shift_sum(row, m, row, n);
  ks.scale(row, 1.0 / total, row, n);
}

// Untracked evaluation of the block computation one head and one segment at
// a time. Only (3k+1)L^2 scores per head are ever formed, in buffers that
// stay small as k grows.
Tensor saicl_attention_untracked(const Tensor& q, const Tensor& k, const Tensor& v,
                                 const SegmentLayout& layout, const RelativeBiasTable* table) {
  const auto& ks = kernels::active();
  const std::size_t H = q.dim(0), T = q.dim(1), d = q.dim(2), dv = v.dim(2);
  const std::size_t L = layout.segment_length(), K = layout.demos();
  const double* Q = q.data().data();
  const double* Kd = k.data().data();
  const double* V = v.data().data();
  Tensor bias_block;
  if (table != nullptr) bias_block = segment_bias_block(*table, L);
  std::vector<double> key_mask(T, 0.0);
  for (std::size_t pos = 0; pos < T; ++pos)
    if (layout.is_padding(pos)) key_mask[pos] = kMaskSentinel;

  std::vector<double> out(H * T * dv, 0.0);
  std::vector<double> own(L * L), cross(L * L), probs(L * 2 * L), vt(dv * 2 * L);
  std::vector<double> test_scores(L * T), v_all(dv * T);
  const std::size_t test0 = K * L;
  for (std::size_t h = 0; h < H; ++h) {
    const double* qh = Q + h * T * d;
    const double* kh = Kd + h * T * d;
    const double* vh = V + h * T * dv;
    const double* bh = table ? bias_block.data().data() + h * L * L : nullptr;
    double* oh = out.data() + h * T * dv;
    // Test block values, transposed, occupy the second half of vt.
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < dv; ++c) vt[c * 2 * L + L + r] = vh[(test0 + r) * dv + c];

    for (std::size_t s = 0; s < K; ++s) {
      const std::size_t base = s * L;
      ks.gemm_nt(L, L, d, qh + base * d, kh + base * d, own.data());
      ks.gemm_nt(L, L, d, qh + base * d, kh + test0 * d, cross.data());
      for (std::size_t t = 0; t < L; ++t) {
        double* row = probs.data() + t * 2 * L;
        for (std::size_t r = 0; r < L; ++r) {
          row[r] = own[t * L + r] + (bh ? bh[t * L + r] : 0.0) + key_mask[base + r];
          row[L + r] = cross[t * L + r] + key_mask[test0 + r];
        }
        softmax_row(row, 2 * L, ks);
      }
      for (std::size_t r = 0; r < L; ++r)
        for (std::size_t c = 0; c < dv; ++c) vt[c * 2 * L + r] = vh[(base + r) * dv + c];
      ks.gemm_nt(L, dv, 2 * L, probs.data(), vt.data(), oh + base * dv);
    }

    ks.gemm_nt(L, T, d, qh + test0 * d, kh, test_scores.data());
    for (std::size_t t = 0; t < L; ++t) {
      double* row = test_scores.data() + t * T;
      ks.add(row, key_mask.data(), row, T);
      if (bh)
        for (std::size_t r = 0; r < L; ++r) row[test0 + r] += bh[t * L + r];
      softmax_row(row, T, ks);
    }
    for (std::size_t r = 0; r < T; ++r)
      for (std::size_t c = 0; c < dv; ++c) v_all[c * T + r] = vh[r * dv + c];
    ks.gemm_nt(L, dv, T, test_scores.data(), v_all.data(), oh + test0 * dv);
  }
  return Tensor::from({H, T, dv}, std::move(out));
}

}  // namespace

Tensor full_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                      const AttentionMask& mask, const Tensor& bias, DropoutSpec dropout) {
  check_qkv(q, k, v);
  if (mask.rows() != q.dim(1) || mask.cols() != k.dim(1))
    throw ShapeError("attention mask is " + std::to_string(mask.rows()) + "x" +
                     std::to_string(mask.cols()) + ", scores are " +
                     std::to_string(q.dim(1)) + "x" + std::to_string(k.dim(1)));
  Tensor scores = contract("htd,hrd->htr", q, k);
  if (bias.defined()) scores = add(scores, bias);
  scores = add(scores, mask.to_tensor());
  const Tensor probs = maybe_dropout(softmax_last(scores), dropout);
  return contract("htr,hrd->htd", probs, v);
}

Tensor saicl_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                       const SegmentLayout& layout, const RelativeBiasTable* table,
                       DropoutSpec dropout) {
  check_qkv(q, k, v);
  const std::size_t H = q.dim(0);
  const std::size_t T = q.dim(1);
  const std::size_t d = q.dim(2);
  const std::size_t dv = v.dim(2);
  const std::size_t L = layout.segment_length();
  const std::size_t S = layout.segments();
  const std::size_t K = layout.demos();
  if (T % L != 0)
    throw LayoutError("sequence length " + std::to_string(T) +
                      " is not divisible by segment length " + std::to_string(L));
  if (T != layout.total_length() || k.dim(1) != T)
    throw LayoutError("sequence length " + std::to_string(T) + " does not match layout of " +
                      std::to_string(layout.total_length()) + " positions");

  const bool tracked = GradTape::current().enabled() &&
                       (q.requires_grad() || k.requires_grad() || v.requires_grad() ||
                        (table != nullptr && table->weights.requires_grad()));
  const bool dropping = dropout.rng != nullptr && dropout.rate != 0.0;
  if (!tracked && !dropping) return saicl_attention_untracked(q, k, v, layout, table);

  const Tensor q5 = reshape(q, {H, S, L, d});
  const Tensor k5 = reshape(k, {H, S, L, d});
  const Tensor v5 = reshape(v, {H, S, L, dv});
  const BlockProbabilities p = block_probabilities(q5, k5, layout, table);

  if (K == 0)
    return contract("htr,hrd->htd", maybe_dropout(p.test_rows, dropout), reshape(v5, {H, L, dv}));

  const Tensor demo_rows = maybe_dropout(p.demo_rows, dropout);
  const Tensor test_rows = maybe_dropout(p.test_rows, dropout);
  const Tensor v_demo = slice(v5, 1, 0, K);
  const Tensor v_test = reshape(slice(v5, 1, K, 1), {H, L, dv});
  const Tensor own = contract("hstr,hsrd->hstd", slice(demo_rows, 3, 0, L), v_demo);
  const Tensor to_test = contract("hstr,hrd->hstd", slice(demo_rows, 3, L, L), v_test);
  const Tensor demo_out = reshape(add(own, to_test), {H, K * L, dv});
  const Tensor test_out = contract("htl,hld->htd", test_rows, v);
  const Tensor parts[] = {demo_out, test_out};
  return concat(parts, 1);
}

Tensor saicl_attention_weights(const Tensor& q, const Tensor& k, const SegmentLayout& layout,
                               const RelativeBiasTable* table) {
  check_qkv(q, k, k);
  const std::size_t H = q.dim(0);
  const std::size_t d = q.dim(2);
  const std::size_t L = layout.segment_length();
  const std::size_t S = layout.segments();
  const std::size_t K = layout.demos();
  const std::size_t T = layout.total_length();
  if (q.dim(1) != T) throw LayoutError("sequence length does not match layout");
  const BlockProbabilities p = block_probabilities(reshape(q, {H, S, L, d}),
                                                   reshape(k, {H, S, L, d}), layout, table);
  std::vector<double> dense(H * T * T, 0.0);
  if (K > 0) {
    const auto demo = p.demo_rows.data();
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t s = 0; s < K; ++s)
        for (std::size_t t = 0; t < L; ++t) {
          const double* row = demo.data() + ((h * K + s) * L + t) * 2 * L;
          double* dst = dense.data() + (h * T + s * L + t) * T;
          for (std::size_t r = 0; r < L; ++r) {
            dst[s * L + r] = row[r];
            dst[K * L + r] = row[L + r];
          }
        }
  }
  const auto test = p.test_rows.data();
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t t = 0; t < L; ++t)
      std::copy_n(test.data() + (h * L + t) * T, T, dense.data() + (h * T + K * L + t) * T);
  return Tensor::from({H, T, T}, std::move(dense));
}

ScoreStorage score_storage(std::size_t k, std::size_t segment_length) {
  const std::size_t l2 = segment_length * segment_length;
  return {(k + 1) * (k + 1) * l2, (3 * k + 1) * l2};
}

}  // namespace saicl
