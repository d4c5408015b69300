// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace gdiff {

struct SuiteResult {
  std::string name;
  bool passed = false;
  /// Worst observed error and the tolerance it was held to.
  double error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

std::vector<std::string> oracle_suite_names();

/// Runs the quick property suites. A suite named in `inject_fault` is held
/// to an unreachable tolerance so the failure path can be exercised.
std::vector<SuiteResult> run_oracle_checks(const std::string& inject_fault = "");

}  // namespace gdiff
