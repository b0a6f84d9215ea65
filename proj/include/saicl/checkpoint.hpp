// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>

#include "saicl/model.hpp"

namespace saicl {

// Binary layout, little-endian:
//   "SAICLCK1"  u32 version  u64 header_bytes  header (JSON ModelConfig)
//   u64 count  then per tensor: u32 name_len  name  u32 rank  u64 dims[rank]
//   f64 values[numel]
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

void save_checkpoint(const Model& model, std::ostream& out);
void save_checkpoint(const Model& model, const std::string& path);

// Rebuilds the model from the stored config and overwrites every parameter.
// Throws FormatError on a bad magic, version, name or shape.
Model load_checkpoint(std::istream& in);
Model load_checkpoint(const std::string& path);

}  // namespace saicl
