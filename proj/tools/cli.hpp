// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace saicl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. args excludes the program name.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace saicl
