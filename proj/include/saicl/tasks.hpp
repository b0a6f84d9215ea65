// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "saicl/prompt_pack.hpp"

namespace saicl {

struct TaskExample {
  Tokens x;
  Tokens y;
  std::string task;
  std::vector<Tokens> options;  // empty for open-ended tasks

  void validate() const;
  bool operator==(const TaskExample&) const = default;
};

struct Episode {
  std::vector<TaskExample> demos;
  TaskExample test;
};

// lookup: each episode draws a fresh key -> label table; the test key is one
//   of the demonstrated keys.
// classify: each feature token votes for a class under a fresh random
//   assignment; the label is the winning class mapped through a fresh label
//   space drawn from a pool of 2 * arity tokens.
// copy_offset: y = x + offset elementwise, wrapping inside the token range.
enum class TaskKind { lookup, classify, copy_offset };

std::string_view task_kind_name(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct TaskFamily {
  TaskKind kind = TaskKind::lookup;
  int token_lo = 2;   // first usable token id
  int token_hi = 64;  // one past the last
  std::size_t arity = 4;
  std::size_t input_length = 1;
  std::vector<int> offsets{1};

  static TaskFamily lookup(std::size_t vocab = 64);
  static TaskFamily classify(std::size_t vocab = 64);
  static TaskFamily copy_offset(std::size_t vocab = 64);

  void validate() const;
  // Largest k for which an episode can still be drawn.
  std::size_t max_demos() const;
};

Episode sample_episode(const TaskFamily& family, std::size_t k, std::uint64_t seed);

// Deterministic seed for episode `index` of stream `seed`.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t index);

// JSON lines: {"task": ..., "input": [...], "output": [...], "options": [[...], ...]}
void write_dataset(std::ostream& out, const std::vector<TaskExample>& examples);
void write_dataset(const std::string& path, const std::vector<TaskExample>& examples);
std::vector<TaskExample> read_dataset(std::istream& in);
std::vector<TaskExample> read_dataset(const std::string& path);

}  // namespace saicl
