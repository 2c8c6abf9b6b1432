#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "taskgemm/bench.hpp"
#include "taskgemm/errors.hpp"

using namespace taskgemm;
using bench::ExecutionMode;

namespace {

bench::ExperimentConfig small_config() {
  bench::ExperimentConfig cfg;
  cfg.spins = 6;
  cfg.steps = 50;
  cfg.procedures = 4;
  cfg.devices = 1;
  cfg.device_slots = 2;
  cfg.entropy_kind = spinmc::EntropyKind::kRenyi2;
  cfg.seed = 99;
  return cfg;
}

bool traces_equal(const bench::RunReport& a, const bench::RunReport& b) {
  if (a.traces.size() != b.traces.size()) return false;
  for (std::size_t p = 0; p < a.traces.size(); ++p) {
    if (a.traces[p].entropies != b.traces[p].entropies) return false;
    if (a.traces[p].accepted_flags != b.traces[p].accepted_flags) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("single procedure gives identical traces in all four modes") {
  bench::ExperimentConfig cfg = small_config();
  cfg.procedures = 1;

  bench::RunReport reference;
  bool first = true;
  for (auto mode : {ExecutionMode::kSequential, ExecutionMode::kBatched, ExecutionMode::kTasked,
                    ExecutionMode::kCpuReference}) {
    cfg.mode = mode;
    bench::RunReport report = bench::run_experiment(cfg);
    REQUIRE(report.traces.size() == 1);
    if (first) {
      reference = std::move(report);
      first = false;
    } else {
      CHECK(traces_equal(report, reference));
      CHECK(report.average_entropy == reference.average_entropy);
    }
  }
}

TEST_CASE("procedures bind to device p mod devices") {
  bench::ExperimentConfig cfg = small_config();
  cfg.procedures = 8;
  cfg.devices = 2;
  cfg.mode = ExecutionMode::kTasked;
  const auto report = bench::run_experiment(cfg);
  REQUIRE(report.devices.size() == 2);
  CHECK(report.devices[0].procedures == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK(report.devices[1].procedures == std::vector<std::size_t>{1, 3, 5, 7});
}

TEST_CASE("traces are bitwise identical across modes, device modes and slots") {
  bench::ExperimentConfig base = small_config();
  base.entropy_kind = spinmc::EntropyKind::kVonNeumann;

  bench::RunReport reference;
  bool first = true;
  for (auto mode : {ExecutionMode::kSequential, ExecutionMode::kBatched, ExecutionMode::kTasked,
                    ExecutionMode::kCpuReference}) {
    for (auto device_mode :
         {exec::DeviceMode::kExclusiveContext, exec::DeviceMode::kSharedContext}) {
      for (std::size_t slots : {std::size_t{1}, std::size_t{4}}) {
        bench::ExperimentConfig cfg = base;
        cfg.mode = mode;
        cfg.device_mode = device_mode;
        cfg.device_slots = slots;
        bench::RunReport report = bench::run_experiment(cfg);
        if (first) {
          reference = std::move(report);
          first = false;
        } else {
          CHECK(traces_equal(report, reference));
        }
      }
    }
  }
}

TEST_CASE("total wall dominates device busy time") {
  bench::ExperimentConfig cfg = small_config();
  cfg.mode = ExecutionMode::kTasked;
  const auto report = bench::run_experiment(cfg);
  for (const auto& dev : report.devices) {
    CHECK(report.total_wall >= dev.metrics.busy_time);
    CHECK(dev.metrics.busy_time + dev.metrics.idle_time == dev.metrics.makespan);
  }
}

TEST_CASE("wave admission throttles concurrency") {
  bench::ExperimentConfig cfg = small_config();
  cfg.procedures = 4;
  cfg.steps = 100;
  cfg.spins = 8;
  cfg.mode = ExecutionMode::kTasked;
  cfg.device_slots = 4;

  cfg.procedures_per_device = 4;
  const auto wide = bench::run_experiment(cfg);
  cfg.procedures_per_device = 1;
  const auto narrow = bench::run_experiment(cfg);

  CHECK(traces_equal(wide, narrow));
  // One-at-a-time waves behave like the sequential baseline.
  CHECK(std::chrono::duration<double>(narrow.total_wall).count() >
        2.0 * std::chrono::duration<double>(wide.total_wall).count());
}

TEST_CASE("steps=0 degenerates to the initial entropy") {
  bench::ExperimentConfig cfg = small_config();
  cfg.steps = 0;
  cfg.mode = ExecutionMode::kTasked;
  const auto report = bench::run_experiment(cfg);
  CHECK(report.average_entropy == 0.0);
  for (const auto& t : report.traces) CHECK(t.entropies.empty());
}

TEST_CASE("extrapolate_runtime is the linear rule") {
  using std::chrono::seconds;
  const auto hundred = std::chrono::duration_cast<exec::VirtualTime>(seconds(100));
  const auto scaled = bench::extrapolate_runtime(hundred, 1000, 1'000'000);
  CHECK(std::chrono::duration_cast<seconds>(scaled).count() == 100'000);
  CHECK(bench::extrapolate_runtime(hundred, 400, 400) == hundred);
  CHECK_THROWS_AS(bench::extrapolate_runtime(hundred, 0, 10), std::invalid_argument);
}

TEST_CASE("speedup requires matching workloads") {
  bench::ExperimentConfig cfg = small_config();
  cfg.mode = ExecutionMode::kTasked;
  const auto report = bench::run_experiment(cfg);
  CHECK(bench::speedup(report, report) == 1.0);

  bench::ExperimentConfig other = cfg;
  other.mode = ExecutionMode::kSequential;
  const auto seq = bench::run_experiment(other);
  CHECK(bench::speedup(report, seq) > 0.0);

  other.steps = cfg.steps + 1;
  const auto mismatched = bench::run_experiment(other);
  CHECK_THROWS_AS(bench::speedup(report, mismatched), std::invalid_argument);
}

TEST_CASE("speedup reference points from fixed wall times") {
  bench::RunReport cpu;
  cpu.total_wall = std::chrono::duration_cast<exec::VirtualTime>(std::chrono::seconds(14735));
  bench::RunReport tasked = cpu;
  tasked.total_wall = std::chrono::duration_cast<exec::VirtualTime>(std::chrono::seconds(420));
  bench::RunReport batched = cpu;
  batched.total_wall = std::chrono::duration_cast<exec::VirtualTime>(std::chrono::seconds(534));
  CHECK(bench::speedup(tasked, cpu) == doctest::Approx(35.1).epsilon(0.002));
  CHECK(bench::speedup(batched, cpu) == doctest::Approx(27.6).epsilon(0.002));
}

TEST_CASE("sweep produces one cell per (procedures, mode) pair") {
  bench::ExperimentConfig cfg = small_config();
  cfg.steps = 20;
  const auto single = bench::sweep(cfg, {2}, {ExecutionMode::kTasked}, 1);
  REQUIRE(single.cells.size() == 1);
  CHECK(single.cells[0].procedures == 2);
  CHECK(single.cells[0].mode == ExecutionMode::kTasked);
  CHECK(single.cells[0].speedup_vs_sequential > 0.0);

  const auto table =
      bench::sweep(cfg, {1, 2}, {ExecutionMode::kSequential, ExecutionMode::kBatched,
                                 ExecutionMode::kTasked}, 1);
  REQUIRE(table.cells.size() == 6);
  // Equal procedure counts share the seed, so the averages agree exactly.
  CHECK(table.cells[0].report.average_entropy == table.cells[1].report.average_entropy);
  CHECK(table.cells[1].report.average_entropy == table.cells[2].report.average_entropy);
  CHECK(table.cells[0].speedup_vs_sequential == 1.0);

  CHECK_THROWS_AS(bench::sweep(cfg, {}, {ExecutionMode::kTasked}, 1), std::invalid_argument);
}

TEST_CASE("config validation") {
  bench::ExperimentConfig cfg = small_config();
  cfg.spins = 40;
  CHECK_THROWS_WITH_AS(bench::validate(cfg), doctest::Contains("spins out of range [2,30]"),
                       ConfigError);
  cfg = small_config();
  cfg.procedures = 0;
  CHECK_THROWS_AS(bench::validate(cfg), ConfigError);
  cfg = small_config();
  cfg.devices = 0;
  CHECK_THROWS_AS(bench::validate(cfg), ConfigError);
  cfg = small_config();
  cfg.schedule.t_min = 2.0;  // above t0
  CHECK_THROWS_AS(bench::validate(cfg), ConfigError);

  cfg = small_config();
  cfg.procedures = 10;
  cfg.devices = 3;
  CHECK(bench::resolved_procedures_per_device(cfg) == 4);
  cfg.procedures_per_device = 2;
  CHECK(bench::resolved_procedures_per_device(cfg) == 2);
}

TEST_CASE("median run is one of the repetitions") {
  bench::ExperimentConfig cfg = small_config();
  cfg.steps = 10;
  cfg.mode = ExecutionMode::kTasked;
  const auto report = bench::run_experiment_median(cfg, 3);
  CHECK(report.traces.size() == cfg.procedures);
  CHECK(report.total_wall.count() > 0);
}

TEST_CASE("mode round trip strings") {
  for (auto mode : {ExecutionMode::kSequential, ExecutionMode::kBatched, ExecutionMode::kTasked,
                    ExecutionMode::kCpuReference}) {
    CHECK(bench::mode_from_string(bench::to_string(mode)) == mode);
  }
  CHECK_FALSE(bench::mode_from_string("warp-speed").has_value());
}
