#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taskgemm/bench.hpp"
#include "taskgemm/errors.hpp"
#include "taskgemm/report_io.hpp"
#include "taskgemm/verify.hpp"

namespace {

using namespace taskgemm;

struct RunOptions {
  bench::ExperimentConfig config;
  std::string mode = "tasked";
  std::string device_mode = "shared";
  std::string entropy = "renyi-2";
  std::string objective = "max";
  std::string initial_state = "product";
  std::vector<std::size_t> sweep_procedures;
  std::size_t repeats = 3;
  std::string baseline_path;
  std::string out_dir = ".";
  bool kernel_log = false;
  std::optional<std::uint64_t> seed_flag;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("TASKGEMM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("TASKGEMM_SEED is not a valid unsigned integer: " + std::string(env));
    }
  }
  return 0;
}

template <typename Parser>
auto parse_enum(Parser parser, const std::string& value, const char* flag) {
  auto parsed = parser(value);
  if (!parsed) throw ConfigError(std::string("unknown value for ") + flag + ": " + value);
  return *parsed;
}

int do_run(RunOptions& opt) {
  opt.config.mode = parse_enum(bench::mode_from_string, opt.mode, "--mode");
  opt.config.device_mode =
      parse_enum(bench::device_mode_from_string, opt.device_mode, "--device-mode");
  opt.config.entropy_kind = parse_enum(bench::entropy_kind_from_string, opt.entropy, "--entropy");
  opt.config.objective = parse_enum(bench::objective_from_string, opt.objective, "--objective");
  opt.config.initial_state =
      parse_enum(bench::initial_state_from_string, opt.initial_state, "--initial-state");
  opt.config.seed = opt.seed_flag ? *opt.seed_flag : default_seed();
  bench::validate(opt.config);

  const std::filesystem::path out_dir(opt.out_dir);
  std::filesystem::create_directories(out_dir);
  const auto report_path = out_dir / "report.json";
  const auto trace_path = out_dir / "trace.csv";
  const auto kernel_path = out_dir / "kernels.csv";

  if (!opt.sweep_procedures.empty()) {
    const auto table =
        bench::sweep(opt.config, opt.sweep_procedures, {opt.config.mode}, opt.repeats);
    report_io::write_file_atomic(report_path, report_io::sweep_json(opt.config, table));
    // Trajectories are independent of procedure count and mode, so the
    // largest cell's trace subsumes every other cell.
    const bench::SweepCell* largest = &table.cells.front();
    for (const auto& cell : table.cells) {
      if (cell.procedures > largest->procedures) largest = &cell;
    }
    report_io::write_file_atomic(trace_path, report_io::trace_csv(largest->report.traces));
    if (opt.kernel_log) {
      report_io::write_file_atomic(kernel_path, report_io::kernel_csv(largest->report));
    }
    std::printf("sweep: %zu cells -> %s\n", table.cells.size(), report_path.c_str());
    for (const auto& cell : table.cells) {
      std::printf("  N_p=%-4zu %-13s total_wall=%.6fs speedup_vs_sequential=%.3f\n",
                  cell.procedures, bench::to_string(cell.mode),
                  std::chrono::duration<double>(cell.report.total_wall).count(),
                  cell.speedup_vs_sequential);
    }
    return 0;
  }

  bench::RunReport report = bench::run_experiment(opt.config);
  if (!opt.baseline_path.empty()) {
    const auto baseline = report_io::load_baseline(opt.baseline_path);
    bench::RunReport pseudo;
    pseudo.config = baseline.config;
    pseudo.total_wall = baseline.total_wall;
    report.speedup_vs = bench::speedup(report, pseudo);
    report.baseline_label = opt.baseline_path;
  }
  report_io::write_file_atomic(report_path, report_io::report_json(report));
  report_io::write_file_atomic(trace_path, report_io::trace_csv(report.traces));
  if (opt.kernel_log) {
    report_io::write_file_atomic(kernel_path, report_io::kernel_csv(report));
  }
  std::printf("total_wall=%.6fs average_entropy=%.12f nats -> %s\n",
              std::chrono::duration<double>(report.total_wall).count(), report.average_entropy,
              report_path.c_str());
  if (report.speedup_vs) {
    std::printf("speedup vs %s: %.3f\n", report.baseline_label.c_str(), *report.speedup_vs);
  }
  return 0;
}

int do_verify(const std::vector<std::string>& suites, std::optional<std::uint64_t> seed_flag,
              bool inject_fault) {
  if (inject_fault) linalg::testhooks::perturb_gemm = true;
  const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();
  bool all_passed = true;
  for (const auto& result : verify::run_suites(suites, seed)) {
    std::printf("%s %s: %s\n", result.passed ? "PASS" : "FAIL", result.name.c_str(),
                result.detail.c_str());
    all_passed = all_passed && result.passed;
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Execution-policy lab for many small complex GEMMs driven by a "
               "simulated-annealing spin-chain workload"};
  app.require_subcommand(1);

  RunOptions opt;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment or a procedure-count sweep");
  run_cmd->add_option("--spins", opt.config.spins, "Spin count S in [2,30]");
  run_cmd->add_option("--steps", opt.config.steps, "Monte Carlo steps per procedure");
  run_cmd->add_option("--procedures", opt.config.procedures, "Number of MC procedures");
  run_cmd->add_option("--devices", opt.config.devices, "Number of virtual devices");
  run_cmd->add_option("--procedures-per-device", opt.config.procedures_per_device,
                      "Concurrent procedures admitted per device (0 = all in one wave)");
  run_cmd->add_option("--mode", opt.mode, "sequential | batched | tasked | cpu-reference");
  run_cmd->add_option("--device-mode", opt.device_mode, "exclusive | shared");
  run_cmd->add_option("--device-slots", opt.config.device_slots,
                      "Kernel slots per device (0 = cores/devices)");
  run_cmd->add_option("--entropy", opt.entropy, "von-neumann | renyi-2");
  run_cmd->add_option("--objective", opt.objective, "max | min");
  run_cmd->add_option("--t0", opt.config.schedule.t0, "Initial annealing temperature");
  run_cmd->add_option("--t-min", opt.config.schedule.t_min, "Final annealing temperature");
  run_cmd->add_option("--initial-state", opt.initial_state, "product | random");
  run_cmd->add_option("--seed", opt.seed_flag, "Global seed (overrides TASKGEMM_SEED)");
  run_cmd->add_option("--sweep-procedures", opt.sweep_procedures,
                      "Comma-separated procedure counts; runs a sweep instead of one experiment")
      ->delimiter(',');
  run_cmd->add_option("--repeats", opt.repeats, "Reruns per timing cell (median reported)");
  run_cmd->add_option("--baseline", opt.baseline_path, "Baseline report.json for speedup");
  run_cmd->add_option("--out", opt.out_dir, "Output directory");
  run_cmd->add_flag("--kernel-log", opt.kernel_log, "Also write per-kernel kernels.csv");

  std::vector<std::string> suites;
  std::optional<std::uint64_t> verify_seed;
  bool inject_fault = false;
  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle verification suites");
  verify_cmd->add_option("--suite", suites, "gemm | entropy | cross-executor (repeatable)");
  verify_cmd->add_option("--seed", verify_seed, "Seed for the suites");
  verify_cmd->add_flag("--inject-fault", inject_fault,
                       "Corrupt one GEMM accumulation (proves the suites catch it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return do_run(opt);
    return do_verify(suites, verify_seed, inject_fault);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
