#include "taskgemm/verify.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "taskgemm/bench.hpp"
#include "taskgemm/oracle.hpp"

namespace taskgemm::verify {

namespace {

using linalg::Complex;
using linalg::ComplexMatrix;

spinmc::SpinChainState ghz_state(std::size_t spins) {
  spinmc::SpinChainState s;
  s.spins = spins;
  s.amplitudes.assign(std::size_t{1} << spins, Complex{0.0, 0.0});
  const double w = 1.0 / std::numbers::sqrt2;
  s.amplitudes.front() = Complex{w, 0.0};
  s.amplitudes.back() = Complex{w, 0.0};
  return s;
}

spinmc::SpinChainState random_normalized_state(std::size_t spins, rng::RandomStream& stream) {
  return spinmc::random_state(spins, stream);
}

}  // namespace

SuiteResult run_gemm_suite(std::uint64_t seed) {
  SuiteResult result{"gemm", true, ""};
  std::ostringstream detail;
  auto stream = rng::derive_stream({seed, 101});

  double worst = 0.0;
  for (int trial = 0; trial < 60 && result.passed; ++trial) {
    const std::size_t m = 1 + stream.uniform_index(24);
    const std::size_t n = 1 + stream.uniform_index(24);
    const std::size_t k = 1 + stream.uniform_index(24);
    const auto [ar, ai] = stream.standard_normal_pair();
    const auto [br, bi] = stream.standard_normal_pair();
    const Complex alpha{ar, ai};
    const Complex beta{br, bi};
    const ComplexMatrix a = oracle::random_matrix(m, k, stream);
    const ComplexMatrix b = oracle::random_matrix(k, n, stream);
    const ComplexMatrix c = oracle::random_matrix(m, n, stream);

    const ComplexMatrix got = linalg::gemm(alpha, a, b, beta, c);
    const ComplexMatrix want = oracle::naive_gemm(alpha, a, b, beta, c);
    worst = std::max(worst, oracle::max_relative_error(got, want));
    if (worst > 1e-13) {
      detail << "relative error " << worst << " vs triple-loop oracle at trial " << trial;
      result.passed = false;
      break;
    }
    for (std::size_t tile : {std::size_t{1}, std::size_t{3}, std::size_t{8}, std::size_t{64}}) {
      if (!linalg::gemm_tiled(alpha, a, b, beta, c, tile).bitwise_equal(got)) {
        detail << "tile=" << tile << " not bitwise-equal to untiled at trial " << trial;
        result.passed = false;
        break;
      }
    }
  }
  if (result.passed) detail << "60 random instances, max relative error " << worst;
  result.detail = detail.str();
  return result;
}

SuiteResult run_entropy_suite(std::uint64_t seed) {
  SuiteResult result{"entropy", true, ""};
  std::ostringstream detail;
  exec::DirectExecutor executor;

  double worst = 0.0;
  for (std::size_t spins : {std::size_t{2}, std::size_t{4}, std::size_t{6}, std::size_t{8}}) {
    for (std::size_t trial = 0; trial < 8; ++trial) {
      auto stream = rng::derive_stream({seed, 1000 + spins * 10 + trial});
      const auto state = random_normalized_state(spins, stream);
      const double got =
          spinmc::entanglement_entropy(state, spinmc::EntropyKind::kVonNeumann, executor);
      const double want = oracle::von_neumann_entropy_direct(state);
      worst = std::max(worst, std::abs(got - want));
    }
  }
  if (worst > 1e-9) {
    detail << "von Neumann entropy deviates from partial-trace oracle by " << worst;
    result.passed = false;
  }

  if (result.passed) {
    const double product = spinmc::entanglement_entropy(
        spinmc::product_state(6), spinmc::EntropyKind::kVonNeumann, executor);
    if (std::abs(product) > 1e-10) {
      detail << "product state entropy " << product << " (expected 0)";
      result.passed = false;
    }
  }
  if (result.passed) {
    for (auto kind : {spinmc::EntropyKind::kVonNeumann, spinmc::EntropyKind::kRenyi2}) {
      const double ghz = spinmc::entanglement_entropy(ghz_state(5), kind, executor);
      if (std::abs(ghz - std::numbers::ln2) > 1e-10) {
        detail << "GHZ entropy " << ghz << " (expected ln 2)";
        result.passed = false;
        break;
      }
    }
  }
  if (result.passed) detail << "oracle agreement within " << worst;
  result.detail = detail.str();
  return result;
}

SuiteResult run_cross_executor_suite(std::uint64_t seed) {
  SuiteResult result{"cross-executor", true, ""};
  std::ostringstream detail;

  bench::ExperimentConfig base;
  base.spins = 6;
  base.steps = 40;
  base.procedures = 4;
  base.devices = 2;
  base.device_slots = 2;
  base.entropy_kind = spinmc::EntropyKind::kVonNeumann;
  base.seed = seed;

  bench::RunReport reference;
  bool have_reference = false;
  for (auto mode : {bench::ExecutionMode::kSequential, bench::ExecutionMode::kBatched,
                    bench::ExecutionMode::kTasked, bench::ExecutionMode::kCpuReference}) {
    for (auto device_mode :
         {exec::DeviceMode::kExclusiveContext, exec::DeviceMode::kSharedContext}) {
      bench::ExperimentConfig cfg = base;
      cfg.mode = mode;
      cfg.device_mode = device_mode;
      bench::RunReport report = bench::run_experiment(cfg);
      if (!have_reference) {
        reference = std::move(report);
        have_reference = true;
        continue;
      }
      for (std::size_t p = 0; p < cfg.procedures && result.passed; ++p) {
        const auto& got = report.traces[p];
        const auto& want = reference.traces[p];
        if (got.entropies != want.entropies || got.accepted_flags != want.accepted_flags) {
          detail << "trace mismatch for procedure " << p << " in mode "
                 << bench::to_string(mode) << "/" << bench::to_string(device_mode);
          result.passed = false;
        }
      }
      if (!result.passed) break;
    }
    if (!result.passed) break;
  }
  if (result.passed) {
    detail << "traces bitwise-identical across 8 mode/device-mode combinations";
  }
  result.detail = detail.str();
  return result;
}

std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, std::uint64_t seed) {
  const bool all = names.empty();
  auto wanted = [&](const char* name) {
    if (all) return true;
    for (const auto& n : names) {
      if (n == name) return true;
    }
    return false;
  };
  std::vector<SuiteResult> results;
  if (wanted("gemm")) results.push_back(run_gemm_suite(seed));
  if (wanted("entropy")) results.push_back(run_entropy_suite(seed));
  if (wanted("cross-executor")) results.push_back(run_cross_executor_suite(seed));
  return results;
}

}  // namespace taskgemm::verify
