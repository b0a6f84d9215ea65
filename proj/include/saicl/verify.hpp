// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace saicl {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool ok() const;
};

// Oracle, invariance and gradient suites over random instances. quick runs
// fewer instances of each. Progress lines go to `log` when given.
VerifyReport run_verify(bool quick, std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace saicl
