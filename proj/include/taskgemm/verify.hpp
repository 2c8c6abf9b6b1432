#ifndef TASKGEMM_VERIFY_HPP
#define TASKGEMM_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace taskgemm::verify {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// GEMM against the triple-loop oracle, plus tiled-vs-untiled bitwise checks.
SuiteResult run_gemm_suite(std::uint64_t seed);

/// Entanglement entropy through the GEMM path against the direct
/// partial-trace + dense-diagonalization oracle, plus analytic states.
SuiteResult run_entropy_suite(std::uint64_t seed);

/// Entropy traces and acceptance flags must be bitwise identical across all
/// execution modes, device modes and slot counts.
SuiteResult run_cross_executor_suite(std::uint64_t seed);

/// Runs the named suites ("gemm", "entropy", "cross-executor"); empty = all.
std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, std::uint64_t seed);

}  // namespace taskgemm::verify

#endif
