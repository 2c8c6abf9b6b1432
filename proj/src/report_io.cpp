#include "taskgemm/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "taskgemm/errors.hpp"

namespace taskgemm::report_io {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json config_json(const bench::ExperimentConfig& cfg) {
  return json{{"spins", cfg.spins},
              {"steps", cfg.steps},
              {"procedures", cfg.procedures},
              {"devices", cfg.devices},
              {"procedures_per_device", cfg.procedures_per_device},
              {"mode", bench::to_string(cfg.mode)},
              {"device_mode", bench::to_string(cfg.device_mode)},
              {"device_slots", cfg.device_slots},
              {"entropy", bench::to_string(cfg.entropy_kind)},
              {"objective", bench::to_string(cfg.objective)},
              {"t0", cfg.schedule.t0},
              {"t_min", cfg.schedule.t_min},
              {"initial_state", bench::to_string(cfg.initial_state)},
              {"seed", cfg.seed}};
}

bench::ExperimentConfig config_from_json(const json& j) {
  bench::ExperimentConfig cfg;
  cfg.spins = j.at("spins").get<std::size_t>();
  cfg.steps = j.at("steps").get<std::size_t>();
  cfg.procedures = j.at("procedures").get<std::size_t>();
  cfg.devices = j.at("devices").get<std::size_t>();
  cfg.procedures_per_device = j.at("procedures_per_device").get<std::size_t>();
  cfg.device_slots = j.at("device_slots").get<std::size_t>();
  cfg.schedule.t0 = j.at("t0").get<double>();
  cfg.schedule.t_min = j.at("t_min").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto mode = bench::mode_from_string(j.at("mode").get<std::string>());
  const auto device_mode = bench::device_mode_from_string(j.at("device_mode").get<std::string>());
  const auto entropy = bench::entropy_kind_from_string(j.at("entropy").get<std::string>());
  const auto objective = bench::objective_from_string(j.at("objective").get<std::string>());
  const auto initial = bench::initial_state_from_string(j.at("initial_state").get<std::string>());
  if (!mode || !device_mode || !entropy || !objective || !initial) {
    throw ConfigError("baseline report: unrecognized enum value in config");
  }
  cfg.mode = *mode;
  cfg.device_mode = *device_mode;
  cfg.entropy_kind = *entropy;
  cfg.objective = *objective;
  cfg.initial_state = *initial;
  return cfg;
}

json device_json(const bench::DeviceReport& dev) {
  json j;
  j["device_id"] = dev.device_id;
  j["procedures"] = dev.procedures;
  j["kernel_count"] = dev.metrics.kernel_count;
  j["total_flops"] = dev.metrics.total_flops;
  j["total_throughput_flops_per_s"] = dev.metrics.total_throughput;
  j["high_water_concurrency"] = dev.metrics.high_water_concurrency;
  j["busy_ns"] = dev.metrics.busy_time.count();
  j["idle_ns"] = dev.metrics.idle_time.count();
  j["makespan_ns"] = dev.metrics.makespan.count();
  j["per_gemm_throughput_median"] = median_of(dev.metrics.per_gemm_throughput);
  std::vector<double> latency_throughput;
  latency_throughput.reserve(dev.records.size());
  for (const exec::KernelRecord& r : dev.records) {
    const double latency = std::chrono::duration<double>(r.queue_wait + r.exec_time).count();
    latency_throughput.push_back(static_cast<double>(r.flops) / latency);
  }
  j["per_gemm_latency_throughput_median"] = median_of(std::move(latency_throughput));
  return j;
}

json report_body(const bench::RunReport& report) {
  json j;
  j["config"] = config_json(report.config);
  j["total_wall_ns"] = report.total_wall.count();
  j["average_entropy_nats"] = report.average_entropy;
  j["per_device"] = json::array();
  for (const auto& dev : report.devices) j["per_device"].push_back(device_json(dev));
  if (report.speedup_vs) {
    j["speedup_vs"] = json{{"baseline", report.baseline_label}, {"value", *report.speedup_vs}};
  } else {
    j["speedup_vs"] = nullptr;
  }
  return j;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string report_json(const bench::RunReport& report) {
  return report_body(report).dump(2) + "\n";
}

std::string sweep_json(const bench::ExperimentConfig& base, const bench::SweepTable& table) {
  json j;
  j["config"] = config_json(base);
  j["sweep"] = json::array();
  for (const auto& cell : table.cells) {
    json c = report_body(cell.report);
    c["procedures"] = cell.procedures;
    c["mode"] = bench::to_string(cell.mode);
    c["speedup_vs_sequential"] = cell.speedup_vs_sequential;
    j["sweep"].push_back(std::move(c));
  }
  return j.dump(2) + "\n";
}

std::string trace_csv(const std::vector<spinmc::EntropyTrace>& traces) {
  std::string out = "procedure,step,entropy_nats,accepted,wall_ns\n";
  for (const auto& trace : traces) {
    for (std::size_t s = 0; s < trace.entropies.size(); ++s) {
      out += std::to_string(trace.procedure_index);
      out += ',';
      out += std::to_string(s);
      out += ',';
      out += format_double(trace.entropies[s]);
      out += ',';
      out += trace.accepted_flags[s] ? '1' : '0';
      out += ',';
      out += std::to_string(trace.wall_times[s].count());
      out += '\n';
    }
  }
  return out;
}

std::string kernel_csv(const bench::RunReport& report) {
  std::string out = "device,procedure,m,n,k,queue_wait_ns,exec_ns,flops\n";
  for (const auto& dev : report.devices) {
    for (const exec::KernelRecord& r : dev.records) {
      out += std::to_string(r.device_id);
      out += ',';
      out += std::to_string(r.procedure);
      out += ',';
      out += std::to_string(r.m);
      out += ',';
      out += std::to_string(r.n);
      out += ',';
      out += std::to_string(r.k);
      out += ',';
      out += std::to_string(r.queue_wait.count());
      out += ',';
      out += std::to_string(r.exec_time.count());
      out += ',';
      out += std::to_string(r.flops);
      out += '\n';
    }
  }
  return out;
}

BaselineInfo load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open baseline report: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("baseline report is not valid JSON: " + std::string(e.what()));
  }
  BaselineInfo info;
  try {
    info.config = config_from_json(j.at("config"));
    info.total_wall = exec::VirtualTime{j.at("total_wall_ns").get<std::int64_t>()};
  } catch (const json::exception& e) {
    throw ConfigError("baseline report is missing fields: " + std::string(e.what()));
  }
  return info;
}

}  // namespace taskgemm::report_io
