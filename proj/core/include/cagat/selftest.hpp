// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cagat {

struct SelfTestOptions {
  std::uint64_t seed = 12345;
  int kronecker_instances = 50;
  // Negative control: poisons one backward rule; the gradient check must
  // then fail, proving the checker can detect wrong gradients.
  bool corrupt_backward = false;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double metric = 0.0;     // worst observed error
  double threshold = 0.0;  // pass bound
  std::string detail;
};

struct SelfTestReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Runs the numeric self-checks: Kronecker-oracle equivalence of the
/// diffusion, fixed-point residual of the unified update, truncated-vs-closed
/// NP solutions, the contraction property, and a full-model gradient check in
/// both storage modes. Deterministic in the seed.
SelfTestReport run_selftest(const SelfTestOptions& opts);

}  // namespace cagat
