// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/model.hpp"

#include <string>

#include "saicl/error.hpp"
#include "saicl/ops.hpp"

namespace saicl {

std::string_view format_name(PromptFormat f) {
  return f == PromptFormat::direct ? "direct" : "channel";
}

PromptFormat parse_format(std::string_view name) {
  if (name == "direct") return PromptFormat::direct;
  if (name == "channel") return PromptFormat::channel;
  throw Error("unknown prompt format '" + std::string(name) + "'");
}

void CandidateSet::validate() const {
  if (options.empty()) throw Error("candidate set is empty");
  for (const Tokens& c : options)
    if (c.empty()) throw Error("candidate continuations must be non-empty");
}

void ModelConfig::validate() const {
  if (vocab < 2 || d_model == 0 || heads == 0 || encoder_layers == 0 ||
      decoder_layers == 0 || d_ff == 0)
    throw Error("model config: all sizes must be >= 1 (vocab >= 2)");
  if (d_model % heads != 0)
    throw Error("model config: d_model " + std::to_string(d_model) +
                " is not divisible by heads " + std::to_string(heads));
  encoder_buckets.validate();
  decoder_buckets.validate();
  AttentionConfig{variant, heads, head_dim(), dropout}.validate(d_model);
}

EncoderOutput concat_encoder_outputs(std::span<const EncoderOutput> parts) {
  if (parts.empty()) throw Error("no encoder outputs to concatenate");
  std::vector<Tensor> states;
  EncoderOutput out;
  for (const EncoderOutput& p : parts) {
    states.push_back(p.states);
    out.key_valid.insert(out.key_valid.end(), p.key_valid.begin(), p.key_valid.end());
  }
  out.states = concat(states, 0);
  return out;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t D = config_.d_model;
  const std::size_t F = config_.d_ff;
  const double s = config_.init_std;

  auto attention = [&](const std::string& prefix) {
    return AttentionWeights{add_param(prefix + ".wq", {D, D}, rng, s),
                            add_param(prefix + ".wk", {D, D}, rng, s),
                            add_param(prefix + ".wv", {D, D}, rng, s),
                            add_param(prefix + ".wo", {D, D}, rng, s)};
  };
  auto norm = [&](const std::string& prefix) {
    return Norm{add_constant_param(prefix + ".gain", {D}, 1.0),
                add_constant_param(prefix + ".bias", {D}, 0.0)};
  };
  auto feed_forward = [&](const std::string& prefix) {
    return FeedForward{add_param(prefix + ".w1", {D, F}, rng, s),
                       add_constant_param(prefix + ".b1", {F}, 0.0),
                       add_param(prefix + ".w2", {F, D}, rng, s),
                       add_constant_param(prefix + ".b2", {D}, 0.0)};
  };

  embedding_ = add_param("embedding", {config_.vocab, D}, rng, s);
  encoder_bias_ = {add_param("encoder.relative_bias",
                             {config_.heads, static_cast<std::size_t>(config_.encoder_buckets.buckets)},
                             rng, s),
                   config_.encoder_buckets};
  decoder_bias_ = {add_param("decoder.relative_bias",
                             {config_.heads, static_cast<std::size_t>(config_.decoder_buckets.buckets)},
                             rng, s),
                   config_.decoder_buckets};
  for (std::size_t i = 0; i < config_.encoder_layers; ++i) {
    const std::string p = "encoder." + std::to_string(i);
    EncoderLayer layer;
    layer.attn_norm = norm(p + ".attn_norm");
    layer.self = attention(p + ".self");
    layer.ff_norm = norm(p + ".ff_norm");
    layer.ff = feed_forward(p + ".ff");
    encoder_.push_back(std::move(layer));
  }
  encoder_final_ = norm("encoder.final_norm");
  for (std::size_t i = 0; i < config_.decoder_layers; ++i) {
    const std::string p = "decoder." + std::to_string(i);
    DecoderLayer layer;
    layer.self_norm = norm(p + ".self_norm");
    layer.self = attention(p + ".self");
    layer.cross_norm = norm(p + ".cross_norm");
    layer.cross = attention(p + ".cross");
    layer.ff_norm = norm(p + ".ff_norm");
    layer.ff = feed_forward(p + ".ff");
    decoder_.push_back(std::move(layer));
  }
  decoder_final_ = norm("decoder.final_norm");
  lm_head_ = add_param("lm_head", {D, config_.vocab}, rng, s);
}

Tensor& Model::add_param(const std::string& name, Shape shape, Rng& rng, double std) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = std * rng.normal();
  params_.emplace_back(name, Tensor::from(std::move(shape), std::move(v), true));
  return params_.back().second;
}

Tensor& Model::add_constant_param(const std::string& name, Shape shape, double value) {
  params_.emplace_back(name, Tensor::full(std::move(shape), value, true));
  return params_.back().second;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void Model::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

Tensor Model::split_heads(const Tensor& x) const {
  static constexpr std::size_t kOrder[] = {1, 0, 2};
  return permute(reshape(x, {x.dim(0), config_.heads, config_.head_dim()}), kOrder);
}

Tensor Model::merge_heads(const Tensor& x) const {
  static constexpr std::size_t kOrder[] = {1, 0, 2};
  const Tensor t = permute(x, kOrder);
  return reshape(t, {t.dim(0), config_.d_model});
}

Tensor Model::feed_forward(const FeedForward& ff, const Tensor& x) const {
  return add(matmul(relu(add(matmul(x, ff.w1), ff.b1)), ff.w2), ff.b2);
}

DropoutSpec Model::attention_dropout() const { return {config_.dropout, dropout_rng_}; }

EncoderOutput Model::encode(std::span<const int> tokens, const SegmentLayout& layout,
                            std::optional<AttentionVariant> variant) const {
  if (tokens.size() != layout.total_length())
    throw LayoutError("prompt has " + std::to_string(tokens.size()) + " tokens, layout expects " +
                      std::to_string(layout.total_length()));
  for (int id : tokens)
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab)
      throw Error("token id " + std::to_string(id) + " overflows vocabulary of " +
                  std::to_string(config_.vocab));

  const AttentionVariant kind = variant.value_or(config_.variant);
  AttentionMask full_mask(1, 1);
  Tensor full_bias;
  if (kind == AttentionVariant::full) {
    full_mask = build_full_mask(layout);
    full_bias = bias_for_layout(encoder_bias_, layout, false);
  }

  Tensor x = embedding(embedding_, tokens);
  for (const EncoderLayer& layer : encoder_) {
    const Tensor h = layer_norm(x, layer.attn_norm.gain, layer.attn_norm.bias);
    const Tensor q = split_heads(matmul(h, layer.self.wq));
    const Tensor k = split_heads(matmul(h, layer.self.wk));
    const Tensor v = split_heads(matmul(h, layer.self.wv));
    const Tensor a = kind == AttentionVariant::saicl
                         ? saicl_attention(q, k, v, layout, &encoder_bias_, attention_dropout())
                         : full_attention(q, k, v, full_mask, full_bias, attention_dropout());
    x = add(x, matmul(merge_heads(a), layer.self.wo));
    x = add(x, feed_forward(layer.ff, layer_norm(x, layer.ff_norm.gain, layer.ff_norm.bias)));
  }
  return {layer_norm(x, encoder_final_.gain, encoder_final_.bias), layout.key_valid()};
}

EncoderOutput Model::encode(const PromptPack& prompt, std::optional<AttentionVariant> variant) const {
  return encode(prompt.tokens, prompt.layout, variant);
}

Tensor Model::decoder_logits(const EncoderOutput& encoded, std::span<const int> decoder_input) const {
  if (decoder_input.empty()) throw Error("decoder input is empty");
  if (encoded.states.dim(0) != encoded.key_valid.size())
    throw ShapeError("encoder states and key mask disagree in length");
  const std::size_t n = decoder_input.size();
  const AttentionMask self_mask = build_causal_mask(n);
  const Tensor self_bias = positional_bias(decoder_bias_, n, n);
  const AttentionMask cross_mask = build_key_padding_mask(n, encoded.key_valid);

  Tensor x = embedding(embedding_, decoder_input);
  for (const DecoderLayer& layer : decoder_) {
    Tensor h = layer_norm(x, layer.self_norm.gain, layer.self_norm.bias);
    Tensor a = full_attention(split_heads(matmul(h, layer.self.wq)),
                              split_heads(matmul(h, layer.self.wk)),
                              split_heads(matmul(h, layer.self.wv)), self_mask, self_bias,
                              attention_dropout());
    x = add(x, matmul(merge_heads(a), layer.self.wo));

    h = layer_norm(x, layer.cross_norm.gain, layer.cross_norm.bias);
    a = full_attention(split_heads(matmul(h, layer.cross.wq)),
                       split_heads(matmul(encoded.states, layer.cross.wk)),
                       split_heads(matmul(encoded.states, layer.cross.wv)), cross_mask, Tensor(),
                       attention_dropout());
    x = add(x, matmul(merge_heads(a), layer.cross.wo));
    x = add(x, feed_forward(layer.ff, layer_norm(x, layer.ff_norm.gain, layer.ff_norm.bias)));
  }
  return matmul(layer_norm(x, decoder_final_.gain, decoder_final_.bias), lm_head_);
}

Tensor Model::sequence_logprob(const EncoderOutput& encoded, std::span<const int> continuation) const {
  if (continuation.empty()) throw Error("continuation must be non-empty");
  Tokens input{kBosToken};
  input.insert(input.end(), continuation.begin(), continuation.end() - 1);
  const Tensor log_probs = log_softmax_last(decoder_logits(encoded, input));
  return scale(nll_gather(log_probs, continuation), -1.0);
}

std::vector<double> score_candidates(const Model& model, const EncoderOutput& encoded,
                                     const CandidateSet& candidates) {
  candidates.validate();
  NoGradGuard no_grad;
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const Tokens& c : candidates.options)
    scores.push_back(model.sequence_logprob(encoded, c).item());
  return scores;
}

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw Error("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::size_t predict(const Model& model, const PromptPack& prompt, const CandidateSet& candidates) {
  NoGradGuard no_grad;
  return argmax_first(score_candidates(model, model.encode(prompt), candidates));
}

}  // namespace saicl
