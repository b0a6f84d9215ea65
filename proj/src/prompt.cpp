// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/prompt.hpp"

#include <algorithm>
#include <string>

#include "saicl/error.hpp"

namespace saicl {
namespace {

Tokens truncated(Tokens t, std::size_t l_max) {
  if (t.size() > l_max) t.resize(l_max);
  return t;
}

Tokens demo_segment(const TaskExample& d, PromptFormat format) {
  const Tokens& first = format == PromptFormat::direct ? d.x : d.y;
  const Tokens& second = format == PromptFormat::direct ? d.y : d.x;
  Tokens s = first;
  s.insert(s.end(), second.begin(), second.end());
  return s;
}

std::vector<TaskExample> pick(std::span<const TaskExample> demos, const std::vector<std::size_t>& idx) {
  std::vector<TaskExample> out;
  for (std::size_t i : idx) out.push_back(demos[i]);
  return out;
}

EncoderOutput encode_group(const Model& model, std::span<const TaskExample> demos,
                           const Tokens& test_segment, const PackOptions& options,
                           std::optional<AttentionVariant> variant) {
  return model.encode(pack_prompt(demos, test_segment, demos.size(), options.l_max, options.format),
                      variant);
}

void check_groups(std::size_t groups, std::size_t k) {
  if (groups < 1 || groups > k)
    throw Error("group count " + std::to_string(groups) + " must lie in [1, " + std::to_string(k) + "]");
}

}  // namespace

PromptPack pack_prompt(std::span<const TaskExample> demos, const Tokens& test_segment,
                       std::size_t k, std::size_t l_max, PromptFormat format) {
  if (demos.empty()) throw Error("pack_prompt needs at least one demonstration");
  if (k < 1 || l_max < 1) throw Error("pack_prompt needs k >= 1 and l_max >= 1");
  if (test_segment.empty()) throw Error("pack_prompt: empty test segment");
  const std::size_t budget = kTokensPerDemo * k;
  const Tokens test = truncated(test_segment, l_max);
  if (test.size() > budget)
    throw Error("test input alone (" + std::to_string(test.size()) +
                " tokens) exceeds the packing budget of " + std::to_string(budget));

  PromptPack pack;
  pack.format = format;
  std::vector<Tokens> segments;
  std::size_t total = test.size();
  for (std::size_t i = 0; i < demos.size() && segments.size() < k; ++i) {
    Tokens s = truncated(demo_segment(demos[i], format), l_max);
    if (total + s.size() > budget) break;
    total += s.size();
    segments.push_back(std::move(s));
    pack.provenance.push_back(i);
  }
  segments.push_back(test);

  std::size_t L = 0;
  std::vector<std::size_t> counts;
  for (const Tokens& s : segments) {
    L = std::max(L, s.size());
    counts.push_back(s.size());
  }
  for (const Tokens& s : segments) {
    pack.tokens.insert(pack.tokens.end(), s.begin(), s.end());
    pack.tokens.insert(pack.tokens.end(), L - s.size(), kPadToken);
  }
  pack.layout = SegmentLayout(L, counts);
  return pack;
}

std::vector<TaskExample> admitted_demos(const PromptPack& pack, std::span<const TaskExample> demos) {
  std::vector<TaskExample> out;
  for (std::size_t i : pack.provenance) {
    if (i >= demos.size()) throw Error("provenance index out of range");
    out.push_back(demos[i]);
  }
  return out;
}

std::string_view scheme_name(FusionScheme s) {
  switch (s) {
    case FusionScheme::single: return "single";
    case FusionScheme::fid: return "fid";
    case FusionScheme::group_fid: return "group-fid";
    case FusionScheme::ensemble: return "ensemble";
  }
  return "?";
}

FusionScheme parse_scheme(std::string_view name) {
  if (name == "single") return FusionScheme::single;
  if (name == "fid") return FusionScheme::fid;
  if (name == "group-fid" || name == "group_fid") return FusionScheme::group_fid;
  if (name == "ensemble") return FusionScheme::ensemble;
  throw Error("unknown fusion scheme '" + std::string(name) + "'");
}

FusionPlan FusionPlan::make(FusionScheme scheme, std::size_t k, std::size_t groups) {
  if (k == 0) throw Error("fusion plan needs at least one demonstration");
  if (scheme == FusionScheme::single) {
    if (groups != 1) throw Error("single-prompt scheme requires exactly one group");
  } else if (scheme == FusionScheme::fid) {
    groups = k;
  }
  check_groups(groups, k);
  FusionPlan plan;
  plan.scheme = scheme;
  std::size_t next = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t size = k / groups + (g < k % groups ? 1 : 0);
    std::vector<std::size_t> idx(size);
    for (auto& i : idx) i = next++;
    plan.groups.push_back(std::move(idx));
  }
  return plan;
}

EncoderOutput fid_encode(const Model& model, std::span<const TaskExample> demos,
                         const Tokens& test_segment, const PackOptions& options) {
  if (demos.empty()) throw Error("fid_encode needs at least one demonstration");
  std::vector<EncoderOutput> parts;
  for (std::size_t i = 0; i < demos.size(); ++i)
    parts.push_back(encode_group(model, demos.subspan(i, 1), test_segment, options, AttentionVariant::full));
  return concat_encoder_outputs(parts);
}

EncoderOutput group_fid(const Model& model, std::span<const TaskExample> demos,
                        const Tokens& test_segment, std::size_t groups, const PackOptions& options) {
  const FusionPlan plan = FusionPlan::make(FusionScheme::group_fid, demos.size(), groups);
  std::vector<EncoderOutput> parts;
  for (const auto& idx : plan.groups) {
    const std::vector<TaskExample> members = pick(demos, idx);
    parts.push_back(encode_group(model, members, test_segment, options, std::nullopt));
  }
  return concat_encoder_outputs(parts);
}

std::vector<double> fused_scores(const Model& model, std::span<const TaskExample> demos,
                                 const Tokens& x_test, const CandidateSet& candidates,
                                 FusionScheme scheme, std::size_t groups, const PackOptions& options) {
  candidates.validate();
  NoGradGuard no_grad;
  const FusionPlan plan = FusionPlan::make(scheme, demos.size(), groups);

  auto encode = [&](const Tokens& test_segment) {
    switch (scheme) {
      case FusionScheme::fid: return fid_encode(model, demos, test_segment, options);
      case FusionScheme::group_fid: return group_fid(model, demos, test_segment, groups, options);
      default: return encode_group(model, demos, test_segment, options, std::nullopt);
    }
  };
  auto score = [&](auto&& encode_fn) {
    if (options.format == PromptFormat::direct)
      return score_candidates(model, encode_fn(x_test), candidates);
    std::vector<double> s;
    for (const Tokens& y : candidates.options)
      s.push_back(model.sequence_logprob(encode_fn(y), x_test).item());
    return s;
  };

  if (scheme != FusionScheme::ensemble) return score(encode);

  std::vector<double> mean(candidates.size(), 0.0);
  for (const auto& idx : plan.groups) {
    const std::vector<TaskExample> members = pick(demos, idx);
    const auto s = score([&](const Tokens& test_segment) {
      return encode_group(model, members, test_segment, options, std::nullopt);
    });
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += s[c];
  }
  for (double& m : mean) m /= static_cast<double>(plan.group_count());
  return mean;
}

std::size_t fused_predict(const Model& model, std::span<const TaskExample> demos,
                          const Tokens& x_test, const CandidateSet& candidates,
                          FusionScheme scheme, std::size_t groups, const PackOptions& options) {
  return argmax_first(fused_scores(model, demos, x_test, candidates, scheme, groups, options));
}

std::size_t ensemble_predict(const Model& model, std::span<const TaskExample> demos,
                             const Tokens& x_test, const CandidateSet& candidates,
                             std::size_t groups, const PackOptions& options) {
  return fused_predict(model, demos, x_test, candidates, FusionScheme::ensemble, groups, options);
}

}  // namespace saicl
