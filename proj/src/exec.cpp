#include "taskgemm/exec.hpp"

#include <algorithm>
#include <thread>

namespace taskgemm::exec {

namespace {

using Clock = std::chrono::steady_clock;

VirtualTime measure_since(Clock::time_point t0) {
  auto d = std::chrono::duration_cast<VirtualTime>(Clock::now() - t0);
  // Tiny kernels can land inside one clock tick; keep durations positive so
  // throughput is well-defined.
  return std::max(d, VirtualTime{1});
}

std::tuple<std::size_t, std::size_t, std::size_t> task_dims(const GemmTask& t) {
  return {t.a.rows(), t.b.cols(), t.a.cols()};
}

}  // namespace

std::pair<linalg::ComplexMatrix, KernelRecord> CompletionHandle::await() {
  if (awaited_) throw std::logic_error("CompletionHandle: awaited more than once");
  awaited_ = true;
  if (error_) std::rethrow_exception(error_);
  return {std::move(*result_), record_};
}

VirtualDevice::VirtualDevice(std::size_t id, std::size_t slots, std::size_t workers,
                             DeviceMode mode)
    : id_(id), slots_(slots), workers_(workers), mode_(mode) {
  if (slots_ < 1) throw std::invalid_argument("VirtualDevice: slots must be >= 1");
  if (workers_ < 1) throw std::invalid_argument("VirtualDevice: workers must be >= 1");
}

VirtualDevice::~VirtualDevice() { shutdown(); }

std::size_t VirtualDevice::default_slots(std::size_t device_count) {
  const std::size_t cores = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, cores / std::max<std::size_t>(1, device_count));
}

void VirtualDevice::shutdown() {
  std::lock_guard lock(mutex_);
  shutdown_ = true;
}

VirtualTime VirtualDevice::admit_locked(std::unique_lock<std::mutex>& lock, VirtualTime submit_vt,
                                        bool needs_idle_device) {
  const std::size_t limit =
      needs_idle_device ? 1 : (mode_ == DeviceMode::kSharedContext ? slots_ : 1);
  VirtualTime candidate = std::max(submit_vt, last_start_);
  for (;;) {
    std::vector<VirtualTime> open_ends;
    for (const Interval& iv : job_intervals_) {
      if (iv.end > candidate) open_ends.push_back(iv.end);
    }
    const std::size_t known = open_ends.size();
    if (needs_idle_device) {
      if (known == 0 && executing_jobs_ == 0) return candidate;
      if (known > 0) {
        candidate = *std::max_element(open_ends.begin(), open_ends.end());
        continue;
      }
    } else {
      if (known + executing_jobs_ < limit) return candidate;
      if (known >= limit) {
        std::sort(open_ends.begin(), open_ends.end());
        candidate = open_ends[known - limit];
        continue;
      }
    }
    // Free capacity depends on a kernel that is still executing; wait for its
    // duration to be known.
    commit_cv_.wait(lock);
  }
}

void VirtualDevice::commit_locked(VirtualTime start, VirtualTime end) {
  job_intervals_.push_back({start, end});
  --executing_jobs_;
  commit_cv_.notify_all();
}

CompletionHandle VirtualDevice::submit(GemmTask task) {
  VirtualTime when;
  {
    std::lock_guard lock(mutex_);
    when = submit_frontier_;
  }
  return submit_at(std::move(task), when);
}

CompletionHandle VirtualDevice::submit_at(GemmTask task, VirtualTime when) {
  std::unique_lock lock(mutex_);
  if (shutdown_) throw SubmissionError("VirtualDevice: submit after shutdown");
  const std::uint64_t ticket = next_ticket_++;
  const VirtualTime submit_vt = std::max(when, submit_frontier_);
  submit_frontier_ = submit_vt;
  turn_cv_.wait(lock, [&] { return admission_turn_ == ticket; });

  const VirtualTime start = admit_locked(lock, submit_vt, /*needs_idle_device=*/false);
  last_start_ = start;
  ++executing_jobs_;
  ++admission_turn_;
  turn_cv_.notify_all();
  lock.unlock();

  CompletionHandle handle;
  const auto [m, n, k] = task_dims(task);
  const auto t0 = Clock::now();
  try {
    handle.result_ = linalg::gemm(task.alpha, task.a, task.b, task.beta, task.c);
  } catch (const std::exception& e) {
    handle.error_ = std::make_exception_ptr(KernelError(task.origin_procedure, e.what()));
  }
  const VirtualTime d = measure_since(t0);
  const VirtualTime end = start + d;

  lock.lock();
  if (handle.result_) {
    KernelRecord rec;
    rec.device_id = id_;
    rec.procedure = task.origin_procedure;
    rec.m = m;
    rec.n = n;
    rec.k = k;
    rec.queue_wait = start - submit_vt;
    rec.exec_time = d;
    rec.flops = linalg::gemm_flops(m, n, k);
    records_.push_back(rec);
    handle.record_ = rec;
  }
  commit_locked(start, end);
  lock.unlock();

  handle.completed_at_ = end;
  return handle;
}

std::vector<linalg::ComplexMatrix> VirtualDevice::batched_gemm(GemmBatch batch) {
  VirtualTime when;
  {
    std::lock_guard lock(mutex_);
    when = submit_frontier_;
  }
  return batched_gemm_at(std::move(batch), when).results;
}

BatchResult VirtualDevice::batched_gemm_at(GemmBatch batch, VirtualTime when) {
  if (batch.tasks.empty()) throw std::invalid_argument("batched_gemm: batch must be non-empty");
  const auto dims0 = task_dims(batch.tasks.front());
  for (const GemmTask& t : batch.tasks) {
    if (task_dims(t) != dims0) {
      throw std::invalid_argument(
          "batched_gemm: fixed-size contract violated, batch mixes GEMM shapes");
    }
  }

  std::unique_lock lock(mutex_);
  if (shutdown_) throw SubmissionError("VirtualDevice: submit after shutdown");
  const std::uint64_t ticket = next_ticket_++;
  const VirtualTime submit_vt = std::max(when, submit_frontier_);
  submit_frontier_ = submit_vt;
  turn_cv_.wait(lock, [&] { return admission_turn_ == ticket; });

  const VirtualTime start = admit_locked(lock, submit_vt, /*needs_idle_device=*/true);
  last_start_ = start;
  ++executing_jobs_;
  ++admission_turn_;
  turn_cv_.notify_all();
  lock.unlock();

  // The batch is the parallel unit: entries are spread greedily over the
  // device's worker lanes; the job ends when the last lane drains.
  BatchResult out;
  out.started_at = start;
  out.results.reserve(batch.tasks.size());
  out.records.reserve(batch.tasks.size());
  std::vector<VirtualTime> lane_ends(workers_, start);
  std::exception_ptr error;
  for (const GemmTask& t : batch.tasks) {
    auto lane = std::min_element(lane_ends.begin(), lane_ends.end());
    const VirtualTime entry_start = *lane;
    const auto t0 = Clock::now();
    try {
      out.results.push_back(linalg::gemm(t.alpha, t.a, t.b, t.beta, t.c));
    } catch (const std::exception& e) {
      error = std::make_exception_ptr(KernelError(t.origin_procedure, e.what()));
      break;
    }
    const VirtualTime d = measure_since(t0);
    *lane = entry_start + d;

    KernelRecord rec;
    rec.device_id = id_;
    rec.procedure = t.origin_procedure;
    rec.m = std::get<0>(dims0);
    rec.n = std::get<1>(dims0);
    rec.k = std::get<2>(dims0);
    rec.queue_wait = entry_start - submit_vt;
    rec.exec_time = d;
    rec.flops = linalg::gemm_flops(rec.m, rec.n, rec.k);
    out.records.push_back(rec);
  }
  const VirtualTime end = *std::max_element(lane_ends.begin(), lane_ends.end());
  out.completed_at = end;

  lock.lock();
  if (!error) {
    records_.insert(records_.end(), out.records.begin(), out.records.end());
  }
  commit_locked(start, end);
  lock.unlock();

  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<KernelRecord> VirtualDevice::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

DeviceMetrics VirtualDevice::metrics() const {
  std::lock_guard lock(mutex_);
  if (records_.empty()) {
    throw std::invalid_argument("device_metrics: no completed kernels on device " +
                                std::to_string(id_));
  }

  DeviceMetrics m;
  m.kernel_count = records_.size();
  m.per_gemm_throughput.reserve(records_.size());
  for (const KernelRecord& r : records_) {
    m.total_flops += r.flops;
    m.per_gemm_throughput.push_back(static_cast<double>(r.flops) /
                                    std::chrono::duration<double>(r.exec_time).count());
  }

  // Job-level schedule accounting. A batch is one job, so its interval counts
  // once toward occupancy regardless of how many entries it carried.
  std::vector<Interval> ivs = job_intervals_;
  VirtualTime lo = ivs.front().start, hi = ivs.front().end;
  for (const Interval& iv : ivs) {
    lo = std::min(lo, iv.start);
    hi = std::max(hi, iv.end);
  }
  m.makespan = hi - lo;

  std::vector<std::pair<VirtualTime, int>> events;
  events.reserve(2 * ivs.size());
  for (const Interval& iv : ivs) {
    events.emplace_back(iv.start, +1);
    events.emplace_back(iv.end, -1);
  }
  std::sort(events.begin(), events.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return x.second < y.second;  // close intervals before opening at the same instant
  });
  std::size_t depth = 0;
  m.high_water_concurrency = 0;
  VirtualTime busy{0};
  VirtualTime open_since{0};
  for (const auto& [t, delta] : events) {
    if (delta > 0) {
      if (depth == 0) open_since = t;
      ++depth;
      m.high_water_concurrency = std::max(m.high_water_concurrency, depth);
    } else {
      --depth;
      if (depth == 0) busy += t - open_since;
    }
  }
  m.busy_time = busy;
  m.idle_time = m.makespan - busy;
  m.total_throughput =
      static_cast<double>(m.total_flops) / std::chrono::duration<double>(m.makespan).count();
  return m;
}

DirectExecutor::DirectExecutor() : origin_(Clock::now()) {}

linalg::ComplexMatrix DirectExecutor::run(GemmTask task) {
  return linalg::gemm(task.alpha, task.a, task.b, task.beta, task.c);
}

VirtualTime DirectExecutor::now() {
  return std::chrono::duration_cast<VirtualTime>(Clock::now() - origin_);
}

DeviceExecutor::DeviceExecutor(VirtualDevice& device, std::size_t procedure)
    : device_(device), procedure_(procedure), origin_(Clock::now()) {}

linalg::ComplexMatrix DeviceExecutor::run(GemmTask task) {
  task.origin_procedure = procedure_;
  auto handle = device_.submit(std::move(task));
  return std::move(handle.await().first);
}

VirtualTime DeviceExecutor::now() {
  return std::chrono::duration_cast<VirtualTime>(Clock::now() - origin_);
}

}  // namespace taskgemm::exec
