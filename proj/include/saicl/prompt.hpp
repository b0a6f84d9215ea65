// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "saicl/model.hpp"
#include "saicl/prompt_pack.hpp"
#include "saicl/tasks.hpp"

namespace saicl {

inline constexpr std::size_t kTokensPerDemo = 64;

// Truncates every sample to l_max, then admits demonstrations in the given
// order while at most k are taken and the unpadded total, test segment
// included, stays within 64 * k. Admission stops at the first demonstration
// that does not fit. Segments are padded to the longest admitted one.
// test_segment is x_test under direct and a candidate y under channel.
PromptPack pack_prompt(std::span<const TaskExample> demos, const Tokens& test_segment,
                       std::size_t k, std::size_t l_max, PromptFormat format);

// The demonstrations a pack admitted, in prompt order.
std::vector<TaskExample> admitted_demos(const PromptPack& pack, std::span<const TaskExample> demos);

enum class FusionScheme { single, fid, group_fid, ensemble };

std::string_view scheme_name(FusionScheme s);
FusionScheme parse_scheme(std::string_view name);

struct FusionPlan {
  FusionScheme scheme = FusionScheme::single;
  std::vector<std::vector<std::size_t>> groups;  // demonstration indices per group

  // Contiguous groups, sizes equal up to one, larger groups first.
  // single forces G = 1 and fid forces G = k.
  static FusionPlan make(FusionScheme scheme, std::size_t k, std::size_t groups);
  std::size_t group_count() const { return groups.size(); }
};

struct PackOptions {
  PromptFormat format = PromptFormat::direct;
  std::size_t l_max = 256;
};

// Every single-demonstration prompt encoded independently with full
// attention; states concatenated along the token axis.
EncoderOutput fid_encode(const Model& model, std::span<const TaskExample> demos,
                         const Tokens& test_segment, const PackOptions& options = {});

// G multi-demonstration prompts encoded independently with the model's own
// attention variant; states concatenated.
EncoderOutput group_fid(const Model& model, std::span<const TaskExample> demos,
                        const Tokens& test_segment, std::size_t groups,
                        const PackOptions& options = {});

// Candidate log-probabilities under a fusion scheme. Direct scoring encodes
// the prompt once and scores each candidate; channel scoring re-encodes with
// each candidate as the test segment and scores x_test. ensemble averages the
// per-group scores in group order.
std::vector<double> fused_scores(const Model& model, std::span<const TaskExample> demos,
                                 const Tokens& x_test, const CandidateSet& candidates,
                                 FusionScheme scheme, std::size_t groups,
                                 const PackOptions& options = {});

std::size_t fused_predict(const Model& model, std::span<const TaskExample> demos,
                          const Tokens& x_test, const CandidateSet& candidates,
                          FusionScheme scheme, std::size_t groups,
                          const PackOptions& options = {});

std::size_t ensemble_predict(const Model& model, std::span<const TaskExample> demos,
                             const Tokens& x_test, const CandidateSet& candidates,
                             std::size_t groups, const PackOptions& options = {});

}  // namespace saicl
