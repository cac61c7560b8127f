// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

// Prints one PASS/FAIL line per acceptance criterion. Exits 1 if any fails.

#include <chrono>
#include <cstdio>

#include "exrep/verify.hpp"

int main() {
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  const auto results = exrep::verify::run_acceptance({}, [&](const auto& r) {
    if (!r.passed) ++failed;
    std::printf("%s\n", exrep::verify::format_result(r).c_str());
    std::fflush(stdout);
  });
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // The whole suite has a five minute budget on top of the per-check ones.
  const bool in_budget = total < 300.0;
  std::printf("%zu criteria, %d failed, %.2f s total%s\n", results.size(), failed, total,
              in_budget ? "" : " (over the 300 s budget)");
  return failed == 0 && in_budget ? 0 : 1;
}
