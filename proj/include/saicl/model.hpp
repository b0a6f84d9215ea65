// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saicl/attention.hpp"
#include "saicl/prompt_pack.hpp"
#include "saicl/segment_layout.hpp"
#include "saicl/tensor.hpp"

namespace saicl {

struct ModelConfig {
  std::size_t vocab = 64;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t d_ff = 128;
  AttentionVariant variant = AttentionVariant::saicl;
  BucketParams encoder_buckets{32, 128, true};
  BucketParams decoder_buckets{32, 128, false};
  double dropout = 0.0;
  double init_std = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t head_dim() const { return d_model / heads; }
  bool operator==(const ModelConfig&) const = default;
};

// Encoder states plus which of them the decoder may attend to.
struct EncoderOutput {
  Tensor states;  // [T, d_model]
  std::vector<bool> key_valid;
};

// Concatenates independently encoded prompts along the token axis.
EncoderOutput concat_encoder_outputs(std::span<const EncoderOutput> parts);

using NamedTensor = std::pair<std::string, Tensor>;

// Pre-norm encoder-decoder transformer over an integer vocabulary. Encoder
// self-attention is full or SAICL; decoder self-attention is dense causal;
// cross-attention sees every non-padding encoder position.
class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }

  EncoderOutput encode(std::span<const int> tokens, const SegmentLayout& layout,
                       std::optional<AttentionVariant> variant = std::nullopt) const;
  EncoderOutput encode(const PromptPack& prompt,
                       std::optional<AttentionVariant> variant = std::nullopt) const;

  // Teacher-forced decoder logits [n, vocab] for decoder inputs of length n.
  Tensor decoder_logits(const EncoderOutput& encoded, std::span<const int> decoder_input) const;

  // Sum over positions of log p(continuation[i] | prefix, encoder states),
  // decoded from a BOS start token. Scalar tensor.
  Tensor sequence_logprob(const EncoderOutput& encoded, std::span<const int> continuation) const;

  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  void zero_grad();

  // Enables dropout (if configured) with the given generator; nullptr disables.
  void set_training(Rng* rng) { dropout_rng_ = rng; }

 private:
  struct AttentionWeights {
    Tensor wq, wk, wv, wo;
  };
  struct FeedForward {
    Tensor w1, b1, w2, b2;
  };
  struct Norm {
    Tensor gain, bias;
  };
  struct EncoderLayer {
    Norm attn_norm, ff_norm;
    AttentionWeights self;
    FeedForward ff;
  };
  struct DecoderLayer {
    Norm self_norm, cross_norm, ff_norm;
    AttentionWeights self, cross;
    FeedForward ff;
  };

  Tensor& add_param(const std::string& name, Shape shape, Rng& rng, double std);
  Tensor& add_constant_param(const std::string& name, Shape shape, double value);
  Tensor split_heads(const Tensor& x) const;
  Tensor merge_heads(const Tensor& x) const;
  Tensor feed_forward(const FeedForward& ff, const Tensor& x) const;
  DropoutSpec attention_dropout() const;

  ModelConfig config_;
  std::vector<NamedTensor> params_;
  Tensor embedding_;
  RelativeBiasTable encoder_bias_;
  RelativeBiasTable decoder_bias_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Norm encoder_final_, decoder_final_;
  Tensor lm_head_;
  Rng* dropout_rng_ = nullptr;
};

// Log-probability of every candidate as a continuation of one encoding.
std::vector<double> score_candidates(const Model& model, const EncoderOutput& encoded,
                                     const CandidateSet& candidates);

// Index of the largest score; ties go to the lowest index.
std::size_t argmax_first(std::span<const double> scores);

// Scores each candidate as the continuation of a direct-format prompt and
// returns the best index.
std::size_t predict(const Model& model, const PromptPack& prompt, const CandidateSet& candidates);

}  // namespace saicl
