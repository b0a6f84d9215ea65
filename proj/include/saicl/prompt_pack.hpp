// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "saicl/segment_layout.hpp"

namespace saicl {

using Tokens = std::vector<int>;

inline constexpr int kPadToken = 0;
inline constexpr int kBosToken = 1;

// direct: segments are (x_i, y_i), the test segment is x_test and the scored
// continuation is y. channel: segments are (y_i, x_i), the test segment is a
// candidate y and the scored continuation is x_test.
enum class PromptFormat { direct, channel };

std::string_view format_name(PromptFormat f);
PromptFormat parse_format(std::string_view name);

// One fused prompt ready for the encoder: tokens padded segment by segment.
struct PromptPack {
  Tokens tokens;  // layout.total_length() ids, kPadToken in padding slots
  SegmentLayout layout{1, {1}};
  PromptFormat format = PromptFormat::direct;
  std::vector<std::size_t> provenance;  // caller's demonstration indices, in order
};

// Candidate continuations scored by the decoder.
struct CandidateSet {
  std::vector<Tokens> options;

  std::size_t size() const { return options.size(); }
  void validate() const;
};

}  // namespace saicl
