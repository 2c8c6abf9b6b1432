#ifndef TASKGEMM_REPORT_IO_HPP
#define TASKGEMM_REPORT_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "taskgemm/bench.hpp"

namespace taskgemm::report_io {

/// Write-temp-then-rename; the file is never observable half-written.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Report JSON: config, total_wall_ns, average_entropy_nats, per_device,
/// speedup_vs (null unless a baseline was attached).
std::string report_json(const bench::RunReport& report);

/// Sweep JSON: config echo plus one entry per (procedures, mode) cell.
std::string sweep_json(const bench::ExperimentConfig& base, const bench::SweepTable& table);

/// Trace CSV, header exactly: procedure,step,entropy_nats,accepted,wall_ns
std::string trace_csv(const std::vector<spinmc::EntropyTrace>& traces);

/// Per-kernel log CSV.
std::string kernel_csv(const bench::RunReport& report);

struct BaselineInfo {
  bench::ExperimentConfig config;
  exec::VirtualTime total_wall{0};
};

/// Reads config and total wall time back from a report JSON.
BaselineInfo load_baseline(const std::filesystem::path& path);

}  // namespace taskgemm::report_io

#endif
