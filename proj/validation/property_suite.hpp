#pragma once

// Randomized property and oracle-equivalence checks, shared by the
// `validate` subcommand, the unit tests and the acceptance binary.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mtrl::validation {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  double worst = 0.0;      // largest error seen (or smallest margin, per check)
  double tolerance = 0.0;
  std::string detail;      // first failure, if any
};

// Incremental kernels against dense or naive oracles; each check runs
// `instances` random cases.
std::vector<CheckResult> oracle_equivalence_suite(std::uint64_t seed, std::size_t instances = 100);

// Structural invariants of the modules and of small end-to-end runs.
std::vector<CheckResult> invariant_suite(std::uint64_t seed);

// "PASS name  cases=... worst=... tol=..." (plus detail on failure).
std::string format_check(const CheckResult& check);

bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace mtrl::validation
