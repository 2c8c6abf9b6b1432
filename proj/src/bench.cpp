#include "taskgemm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

#include "taskgemm/errors.hpp"
#include "taskgemm/rng.hpp"

namespace taskgemm::bench {

namespace {

using exec::VirtualTime;
using Clock = std::chrono::steady_clock;

constexpr VirtualTime kNever = VirtualTime::max();

// Conservative min-virtual-time scheduler. One OS thread per procedure, but
// at most one thread executes at a time: a thread runs from one park point to
// the next, and the parked event with the smallest (virtual time, index) is
// released next. Real durations are therefore measured uncontended, while the
// composed schedule realizes the full concurrent timeline. Releasing the
// minimum is safe because a running procedure can only generate events at or
// after its current virtual time.
class TurnScheduler {
 public:
  explicit TurnScheduler(std::size_t n) : unparked_(n) {
    procs_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) procs_.push_back(std::make_unique<Proc>());
  }

  // Marks procedure q eligible to start at vt. Called before the run begins
  // or from a procedure that currently holds the turn.
  void grant_start(std::size_t q, VirtualTime vt) {
    std::lock_guard lock(mutex_);
    procs_[q]->candidate = true;
    procs_[q]->vt = vt;
  }

  // First park of every procedure thread; returns the granted start time.
  VirtualTime await_admission(std::size_t p) {
    std::unique_lock lock(mutex_);
    Proc& me = *procs_[p];
    me.parked = true;
    --unparked_;
    maybe_release_locked();
    me.cv.wait(lock, [&] { return me.released; });
    clear_release_flags(me);
    return me.vt;
  }

  // Ordering rendezvous: returns once this event is globally minimal.
  void await_turn(std::size_t p, VirtualTime vt) {
    std::unique_lock lock(mutex_);
    Proc& me = *procs_[p];
    me.parked = true;
    me.candidate = true;
    me.vt = vt;
    --running_;
    maybe_release_locked();
    me.cv.wait(lock, [&] { return me.released; });
    clear_release_flags(me);
  }

  // Parks until make_candidate names this procedure (lockstep batch members
  // waiting for the wave's GEMM). Returns the wake time.
  VirtualTime park_until_woken(std::size_t p) {
    std::unique_lock lock(mutex_);
    Proc& me = *procs_[p];
    me.parked = true;
    me.candidate = false;
    me.vt = kNever;
    --running_;
    maybe_release_locked();
    me.cv.wait(lock, [&] { return me.released; });
    clear_release_flags(me);
    return me.vt;
  }

  void make_candidate(std::size_t q, VirtualTime vt) {
    std::lock_guard lock(mutex_);
    procs_[q]->candidate = true;
    procs_[q]->vt = vt;
  }

  void finish(std::size_t p) {
    std::lock_guard lock(mutex_);
    procs_[p]->finished = true;
    --running_;
    maybe_release_locked();
  }

 private:
  struct Proc {
    std::condition_variable cv;
    VirtualTime vt{0};
    bool parked = false;
    bool candidate = false;
    bool released = false;
    bool finished = false;
  };

  void clear_release_flags(Proc& me) {
    me.released = false;
    me.parked = false;
    me.candidate = false;
  }

  void maybe_release_locked() {
    if (running_ > 0 || unparked_ > 0) return;
    std::size_t best = procs_.size();
    for (std::size_t i = 0; i < procs_.size(); ++i) {
      const Proc& pr = *procs_[i];
      if (pr.finished || !pr.parked || !pr.candidate || pr.released) continue;
      if (best == procs_.size() || pr.vt < procs_[best]->vt) best = i;
    }
    if (best == procs_.size()) return;
    procs_[best]->released = true;
    ++running_;
    procs_[best]->cv.notify_one();
  }

  std::mutex mutex_;
  std::vector<std::unique_ptr<Proc>> procs_;
  std::size_t running_ = 0;
  std::size_t unparked_ = 0;
};

struct AdmissionState {
  std::vector<std::size_t> assigned;  // procedures bound to this device, ascending
  std::size_t next_unadmitted = 0;
  std::size_t wave_active = 0;  // batched mode: unfinished members of the running wave
  VirtualTime wave_max_finish{0};
};

struct LockstepGroup {
  std::size_t expected = 0;
  std::vector<std::pair<std::size_t, exec::GemmTask>> deposits;
  std::vector<std::pair<std::size_t, linalg::ComplexMatrix>> ready;
  VirtualTime completed_at{0};
};

struct RunCtx {
  ExperimentConfig cfg;
  std::size_t admission_limit = 1;
  TurnScheduler scheduler;
  std::vector<std::unique_ptr<exec::VirtualDevice>> devices;
  std::mutex state_mu;
  std::vector<AdmissionState> admission;
  std::vector<LockstepGroup> groups;
  std::vector<spinmc::EntropyTrace> traces;
  std::vector<VirtualTime> finish_vt;
  std::exception_ptr error;

  RunCtx(const ExperimentConfig& c, std::size_t n_procs, std::size_t n_devices)
      : cfg(c),
        scheduler(n_procs),
        admission(n_devices),
        groups(n_devices),
        traces(n_procs),
        finish_vt(n_procs, VirtualTime{0}) {}
};

class ProcedureRuntime : public exec::GemmExecutor {
 public:
  ProcedureRuntime(RunCtx& ctx, std::size_t proc)
      : ctx_(ctx), proc_(proc), device_idx_(proc % ctx.cfg.devices) {}

  void begin() {
    clock_ = ctx_.scheduler.await_admission(proc_);
    anchor_ = Clock::now();
  }

  VirtualTime now() override { return clock_ + since_anchor(); }

  linalg::ComplexMatrix run(exec::GemmTask task) override {
    task.origin_procedure = proc_;
    if (ctx_.cfg.mode == ExecutionMode::kCpuReference) {
      // Inline kernel; it is part of the running local segment.
      return linalg::gemm(task.alpha, task.a, task.b, task.beta, task.c);
    }
    flush_segment();
    ctx_.scheduler.await_turn(proc_, clock_);
    if (ctx_.cfg.mode == ExecutionMode::kBatched) {
      linalg::ComplexMatrix result = lockstep_gemm(std::move(task));
      anchor_ = Clock::now();
      return result;
    }
    auto handle = ctx_.devices[device_idx_]->submit_at(std::move(task), clock_);
    auto completion = handle.await();
    clock_ = handle.completed_at();
    anchor_ = Clock::now();
    return std::move(completion.first);
  }

  void finish() {
    flush_segment();
    std::vector<std::pair<std::size_t, VirtualTime>> grants;
    bool fire = false;
    {
      std::lock_guard lock(ctx_.state_mu);
      ctx_.finish_vt[proc_] = clock_;
      AdmissionState& adm = ctx_.admission[device_idx_];
      if (ctx_.cfg.mode == ExecutionMode::kBatched) {
        LockstepGroup& group = ctx_.groups[device_idx_];
        // A procedure that aborted mid-wave must not leave its wave-mates
        // waiting on a deposit that will never come.
        if (group.expected > 0) {
          --group.expected;
          fire = !group.deposits.empty() && group.deposits.size() == group.expected;
        }
        adm.wave_max_finish = std::max(adm.wave_max_finish, clock_);
        if (--adm.wave_active == 0) {
          const std::size_t remaining = adm.assigned.size() - adm.next_unadmitted;
          const std::size_t wave = std::min(ctx_.admission_limit, remaining);
          adm.wave_active = wave;
          group.expected = wave;
          for (std::size_t i = 0; i < wave; ++i) {
            grants.emplace_back(adm.assigned[adm.next_unadmitted++], adm.wave_max_finish);
          }
          adm.wave_max_finish = VirtualTime{0};
        }
      } else {
        if (adm.next_unadmitted < adm.assigned.size()) {
          grants.emplace_back(adm.assigned[adm.next_unadmitted++], clock_);
        }
      }
    }
    if (fire) fire_wave();
    for (const auto& [q, vt] : grants) ctx_.scheduler.grant_start(q, vt);
    ctx_.scheduler.finish(proc_);
  }

 private:
  VirtualTime since_anchor() const {
    return std::chrono::duration_cast<VirtualTime>(Clock::now() - anchor_);
  }

  void flush_segment() {
    clock_ += since_anchor();
    anchor_ = Clock::now();
  }

  linalg::ComplexMatrix lockstep_gemm(exec::GemmTask task) {
    bool fire = false;
    {
      std::lock_guard lock(ctx_.state_mu);
      LockstepGroup& group = ctx_.groups[device_idx_];
      group.deposits.emplace_back(proc_, std::move(task));
      fire = group.deposits.size() == group.expected;
    }
    if (!fire) {
      clock_ = ctx_.scheduler.park_until_woken(proc_);
      std::lock_guard lock(ctx_.state_mu);
      return take_ready();
    }
    fire_wave();
    std::lock_guard lock(ctx_.state_mu);
    clock_ = ctx_.groups[device_idx_].completed_at;
    return take_ready();
  }

  // Runs the filled wave as one device-exclusive batch (entries in procedure
  // order) and hands every member its result. Caller holds the turn.
  void fire_wave() {
    exec::GemmBatch batch;
    std::vector<std::size_t> owners;
    {
      std::lock_guard lock(ctx_.state_mu);
      LockstepGroup& group = ctx_.groups[device_idx_];
      std::sort(group.deposits.begin(), group.deposits.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      owners.reserve(group.deposits.size());
      batch.tasks.reserve(group.deposits.size());
      for (auto& [owner, t] : group.deposits) {
        owners.push_back(owner);
        batch.tasks.push_back(std::move(t));
      }
      group.deposits.clear();
    }
    exec::BatchResult res =
        ctx_.devices[device_idx_]->batched_gemm_at(std::move(batch), clock_);
    {
      std::lock_guard lock(ctx_.state_mu);
      LockstepGroup& group = ctx_.groups[device_idx_];
      group.completed_at = res.completed_at;
      for (std::size_t i = 0; i < owners.size(); ++i) {
        group.ready.emplace_back(owners[i], std::move(res.results[i]));
      }
    }
    for (std::size_t owner : owners) {
      if (owner != proc_) ctx_.scheduler.make_candidate(owner, res.completed_at);
    }
  }

  linalg::ComplexMatrix take_ready() {
    auto& ready = ctx_.groups[device_idx_].ready;
    for (auto it = ready.begin(); it != ready.end(); ++it) {
      if (it->first == proc_) {
        linalg::ComplexMatrix m = std::move(it->second);
        ready.erase(it);
        return m;
      }
    }
    throw std::logic_error("lockstep: no result for procedure " + std::to_string(proc_));
  }

  RunCtx& ctx_;
  std::size_t proc_;
  std::size_t device_idx_;
  VirtualTime clock_{0};
  Clock::time_point anchor_{};
};

}  // namespace

void validate(const ExperimentConfig& config) {
  spinmc::dims_for_spins(config.spins);  // throws "spins out of range [2,30]"
  if (config.procedures < 1) throw ConfigError("procedures must be >= 1");
  if (config.devices < 1) throw ConfigError("devices must be >= 1");
  if (config.schedule.t0 <= 0.0 || config.schedule.t_min <= 0.0 ||
      config.schedule.t_min > config.schedule.t0) {
    throw ConfigError("anneal schedule requires 0 < t_min <= t0");
  }
}

std::size_t resolved_procedures_per_device(const ExperimentConfig& config) {
  if (config.procedures_per_device > 0) return config.procedures_per_device;
  return (config.procedures + config.devices - 1) / config.devices;
}

std::size_t resolved_device_slots(const ExperimentConfig& config) {
  if (config.device_slots > 0) return config.device_slots;
  return exec::VirtualDevice::default_slots(config.devices);
}

RunReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentConfig cfg = config;
  cfg.procedures_per_device = resolved_procedures_per_device(config);
  cfg.device_slots = resolved_device_slots(config);

  RunCtx ctx(cfg, cfg.procedures, cfg.devices);
  ctx.admission_limit = cfg.mode == ExecutionMode::kSequential ? 1 : cfg.procedures_per_device;
  for (std::size_t p = 0; p < cfg.procedures; ++p) {
    ctx.admission[p % cfg.devices].assigned.push_back(p);
  }
  if (cfg.mode != ExecutionMode::kCpuReference) {
    for (std::size_t d = 0; d < cfg.devices; ++d) {
      ctx.devices.push_back(std::make_unique<exec::VirtualDevice>(
          d, cfg.device_slots, cfg.device_slots, cfg.device_mode));
    }
  }
  for (std::size_t d = 0; d < cfg.devices; ++d) {
    AdmissionState& adm = ctx.admission[d];
    const std::size_t first_wave = std::min(ctx.admission_limit, adm.assigned.size());
    if (cfg.mode == ExecutionMode::kBatched) {
      adm.wave_active = first_wave;
      ctx.groups[d].expected = first_wave;
    }
    for (std::size_t i = 0; i < first_wave; ++i) {
      ctx.scheduler.grant_start(adm.assigned[adm.next_unadmitted++], VirtualTime{0});
    }
  }

  spinmc::McConfig mc;
  mc.spins = cfg.spins;
  mc.steps = cfg.steps;
  mc.entropy_kind = cfg.entropy_kind;
  mc.objective = cfg.objective;
  mc.schedule = cfg.schedule;
  mc.initial_state = cfg.initial_state;

  std::vector<std::thread> threads;
  threads.reserve(cfg.procedures);
  for (std::size_t p = 0; p < cfg.procedures; ++p) {
    threads.emplace_back([&ctx, &mc, p] {
      ProcedureRuntime runtime(ctx, p);
      runtime.begin();
      try {
        auto stream = rng::derive_stream({ctx.cfg.seed, p});
        ctx.traces[p] = spinmc::mc_procedure(mc, p, stream, runtime);
      } catch (...) {
        std::lock_guard lock(ctx.state_mu);
        if (!ctx.error) ctx.error = std::current_exception();
      }
      runtime.finish();
    });
  }
  for (std::thread& t : threads) t.join();
  if (ctx.error) std::rethrow_exception(ctx.error);

  RunReport report;
  report.config = cfg;
  report.traces = std::move(ctx.traces);
  report.total_wall = *std::max_element(ctx.finish_vt.begin(), ctx.finish_vt.end());
  if (cfg.steps > 0) {
    report.average_entropy = spinmc::average_entropy(report.traces);
  } else {
    double sum = 0.0;
    for (const auto& t : report.traces) sum += t.initial_entropy;
    report.average_entropy = sum / static_cast<double>(report.traces.size());
  }
  for (std::size_t d = 0; d < ctx.devices.size(); ++d) {
    DeviceReport dr;
    dr.device_id = d;
    dr.procedures = ctx.admission[d].assigned;
    dr.records = ctx.devices[d]->records();
    if (!dr.records.empty()) dr.metrics = ctx.devices[d]->metrics();
    report.devices.push_back(std::move(dr));
  }
  return report;
}

RunReport run_experiment_median(const ExperimentConfig& config, std::size_t repetitions) {
  if (repetitions < 1) throw std::invalid_argument("run_experiment_median: repetitions >= 1");
  std::vector<RunReport> runs;
  runs.reserve(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) runs.push_back(run_experiment(config));
  std::sort(runs.begin(), runs.end(),
            [](const RunReport& a, const RunReport& b) { return a.total_wall < b.total_wall; });
  return std::move(runs[runs.size() / 2]);
}

exec::VirtualTime extrapolate_runtime(exec::VirtualTime measured, std::size_t measured_steps,
                                      std::size_t target_steps) {
  if (measured_steps < 1) {
    throw std::invalid_argument("extrapolate_runtime: measured_steps must be >= 1");
  }
  const __int128 scaled = static_cast<__int128>(measured.count()) *
                          static_cast<__int128>(target_steps) /
                          static_cast<__int128>(measured_steps);
  return exec::VirtualTime{static_cast<std::int64_t>(scaled)};
}

double speedup(const RunReport& report, const RunReport& baseline) {
  const ExperimentConfig& a = report.config;
  const ExperimentConfig& b = baseline.config;
  const bool same_workload =
      a.spins == b.spins && a.steps == b.steps && a.procedures == b.procedures &&
      a.entropy_kind == b.entropy_kind && a.objective == b.objective &&
      a.schedule.t0 == b.schedule.t0 && a.schedule.t_min == b.schedule.t_min &&
      a.initial_state == b.initial_state && a.seed == b.seed;
  if (!same_workload) {
    throw std::invalid_argument(
        "speedup: reports describe different workloads (only execution mode and "
        "resources may differ)");
  }
  return std::chrono::duration<double>(baseline.total_wall).count() /
         std::chrono::duration<double>(report.total_wall).count();
}

SweepTable sweep(const ExperimentConfig& base, const std::vector<std::size_t>& procedures_list,
                 const std::vector<ExecutionMode>& modes_list, std::size_t repetitions) {
  if (procedures_list.empty() || modes_list.empty()) {
    throw std::invalid_argument("sweep: procedure and mode lists must be non-empty");
  }
  SweepTable table;
  for (std::size_t np : procedures_list) {
    ExperimentConfig seq_cfg = base;
    seq_cfg.procedures = np;
    seq_cfg.mode = ExecutionMode::kSequential;
    RunReport seq_report = run_experiment_median(seq_cfg, repetitions);
    for (ExecutionMode mode : modes_list) {
      SweepCell cell;
      cell.procedures = np;
      cell.mode = mode;
      if (mode == ExecutionMode::kSequential) {
        cell.report = seq_report;
        cell.speedup_vs_sequential = 1.0;
      } else {
        ExperimentConfig cfg = base;
        cfg.procedures = np;
        cfg.mode = mode;
        cell.report = run_experiment_median(cfg, repetitions);
        cell.speedup_vs_sequential = speedup(cell.report, seq_report);
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

const char* to_string(ExecutionMode mode) {
  switch (mode) {
    case ExecutionMode::kSequential: return "sequential";
    case ExecutionMode::kBatched: return "batched";
    case ExecutionMode::kTasked: return "tasked";
    case ExecutionMode::kCpuReference: return "cpu-reference";
  }
  return "unknown";
}

const char* to_string(exec::DeviceMode mode) {
  return mode == exec::DeviceMode::kExclusiveContext ? "exclusive" : "shared";
}

const char* to_string(spinmc::EntropyKind kind) {
  return kind == spinmc::EntropyKind::kVonNeumann ? "von-neumann" : "renyi-2";
}

const char* to_string(spinmc::Objective objective) {
  return objective == spinmc::Objective::kMaximize ? "max" : "min";
}

const char* to_string(spinmc::InitialState initial) {
  return initial == spinmc::InitialState::kProduct ? "product" : "random";
}

std::optional<ExecutionMode> mode_from_string(std::string_view s) {
  if (s == "sequential") return ExecutionMode::kSequential;
  if (s == "batched") return ExecutionMode::kBatched;
  if (s == "tasked") return ExecutionMode::kTasked;
  if (s == "cpu-reference") return ExecutionMode::kCpuReference;
  return std::nullopt;
}

std::optional<exec::DeviceMode> device_mode_from_string(std::string_view s) {
  if (s == "exclusive") return exec::DeviceMode::kExclusiveContext;
  if (s == "shared") return exec::DeviceMode::kSharedContext;
  return std::nullopt;
}

std::optional<spinmc::EntropyKind> entropy_kind_from_string(std::string_view s) {
  if (s == "von-neumann") return spinmc::EntropyKind::kVonNeumann;
  if (s == "renyi-2") return spinmc::EntropyKind::kRenyi2;
  return std::nullopt;
}

std::optional<spinmc::Objective> objective_from_string(std::string_view s) {
  if (s == "max") return spinmc::Objective::kMaximize;
  if (s == "min") return spinmc::Objective::kMinimize;
  return std::nullopt;
}

std::optional<spinmc::InitialState> initial_state_from_string(std::string_view s) {
  if (s == "product") return spinmc::InitialState::kProduct;
  if (s == "random") return spinmc::InitialState::kRandom;
  return std::nullopt;
}

}  // namespace taskgemm::bench
