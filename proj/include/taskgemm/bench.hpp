#ifndef TASKGEMM_BENCH_HPP
#define TASKGEMM_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskgemm/exec.hpp"
#include "taskgemm/spinmc.hpp"

namespace taskgemm::bench {

enum class ExecutionMode {
  /// One procedure at a time per device.
  kSequential,
  /// Procedures on a device advance in lockstep; each step's GEMMs are packed
  /// into one device-exclusive batch.
  kBatched,
  /// Each procedure is an independent task submitting to its device.
  kTasked,
  /// No device; GEMMs run inline in the procedure.
  kCpuReference,
};

struct ExperimentConfig {
  std::size_t spins = 6;
  std::size_t steps = 100;
  std::size_t procedures = 1;
  std::size_t devices = 1;
  /// Max procedures admitted concurrently per device; 0 resolves to
  /// ceil(procedures / devices) (everything in one wave).
  std::size_t procedures_per_device = 0;
  ExecutionMode mode = ExecutionMode::kTasked;
  exec::DeviceMode device_mode = exec::DeviceMode::kSharedContext;
  /// Kernel slots per device; 0 resolves to cores / devices.
  std::size_t device_slots = 0;
  spinmc::EntropyKind entropy_kind = spinmc::EntropyKind::kRenyi2;
  spinmc::Objective objective = spinmc::Objective::kMaximize;
  spinmc::AnnealSchedule schedule;
  spinmc::InitialState initial_state = spinmc::InitialState::kProduct;
  std::uint64_t seed = 0;
};

struct DeviceReport {
  std::size_t device_id = 0;
  std::vector<std::size_t> procedures;
  exec::DeviceMetrics metrics;
  std::vector<exec::KernelRecord> records;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<spinmc::EntropyTrace> traces;
  std::vector<DeviceReport> devices;
  exec::VirtualTime total_wall{0};
  double average_entropy = 0.0;
  std::optional<double> speedup_vs;
  std::string baseline_label;
};

/// Throws ConfigError on invalid fields (e.g. "spins out of range [2,30]").
void validate(const ExperimentConfig& config);

std::size_t resolved_procedures_per_device(const ExperimentConfig& config);
std::size_t resolved_device_slots(const ExperimentConfig& config);

/// Runs N_p annealing procedures over the configured devices. Procedure p is
/// bound to device p mod devices; at most procedures_per_device procedures
/// are admitted concurrently per device and the rest start as slots free.
/// Entropy traces depend only on (seed, config workload), never on mode,
/// device mode, slot count or scheduling.
RunReport run_experiment(const ExperimentConfig& config);

/// Reruns the experiment and returns the run with the median total wall time.
RunReport run_experiment_median(const ExperimentConfig& config, std::size_t repetitions = 3);

/// Linear step scaling: measured * target_steps / measured_steps.
exec::VirtualTime extrapolate_runtime(exec::VirtualTime measured, std::size_t measured_steps,
                                      std::size_t target_steps);

/// baseline.total_wall / report.total_wall. The two reports must describe the
/// same workload (everything except execution mode and resources).
double speedup(const RunReport& report, const RunReport& baseline);

struct SweepCell {
  std::size_t procedures = 0;
  ExecutionMode mode = ExecutionMode::kTasked;
  RunReport report;
  double speedup_vs_sequential = 1.0;
};

struct SweepTable {
  std::vector<SweepCell> cells;
};

/// Cartesian product of procedure counts and modes under a shared seed; each
/// cell reports the median of `repetitions` runs and its speedup against the
/// sequential-mode run at the same procedure count.
SweepTable sweep(const ExperimentConfig& base, const std::vector<std::size_t>& procedures_list,
                 const std::vector<ExecutionMode>& modes_list, std::size_t repetitions = 3);

const char* to_string(ExecutionMode mode);
const char* to_string(exec::DeviceMode mode);
const char* to_string(spinmc::EntropyKind kind);
const char* to_string(spinmc::Objective objective);
const char* to_string(spinmc::InitialState initial);

std::optional<ExecutionMode> mode_from_string(std::string_view s);
std::optional<exec::DeviceMode> device_mode_from_string(std::string_view s);
std::optional<spinmc::EntropyKind> entropy_kind_from_string(std::string_view s);
std::optional<spinmc::Objective> objective_from_string(std::string_view s);
std::optional<spinmc::InitialState> initial_state_from_string(std::string_view s);

}  // namespace taskgemm::bench

#endif
