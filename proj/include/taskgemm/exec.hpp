#ifndef TASKGEMM_EXEC_HPP
#define TASKGEMM_EXEC_HPP

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "taskgemm/linalg.hpp"

namespace taskgemm::exec {

/// Position on a device's scheduling timeline. Durations on this timeline are
/// real kernel measurements; the timeline itself is simulated, which is what
/// lets one host reproduce W-way device concurrency faithfully.
using VirtualTime = std::chrono::nanoseconds;

enum class DeviceMode {
  /// Only one job's kernel can be resident at a time (one active context).
  kExclusiveContext,
  /// Up to `slots` jobs interleave on the device (MPS-style shared context).
  kSharedContext,
};

/// One C = alpha*A*B + beta*C instance. Matrices are owned by the task and
/// transferred to the device at submission; the result comes back on await.
struct GemmTask {
  linalg::Complex alpha{1.0, 0.0};
  linalg::Complex beta{0.0, 0.0};
  linalg::ComplexMatrix a;
  linalg::ComplexMatrix b;
  linalg::ComplexMatrix c;
  std::size_t origin_procedure = 0;
};

/// Fixed-size batch: non-empty, all tasks share one (m, n, k).
struct GemmBatch {
  std::vector<GemmTask> tasks;
};

struct KernelRecord {
  std::size_t device_id = 0;
  std::size_t procedure = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  VirtualTime queue_wait{0};
  VirtualTime exec_time{0};
  std::uint64_t flops = 0;
};

struct DeviceMetrics {
  std::size_t kernel_count = 0;
  std::uint64_t total_flops = 0;
  /// flops / exec_time, one entry per completed kernel.
  std::vector<double> per_gemm_throughput;
  /// total_flops / makespan.
  double total_throughput = 0.0;
  /// Max number of jobs resident at once (a batch counts as one job).
  std::size_t high_water_concurrency = 0;
  VirtualTime busy_time{0};
  VirtualTime idle_time{0};
  VirtualTime makespan{0};
};

class SubmissionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KernelError : public std::runtime_error {
 public:
  KernelError(std::size_t procedure, const std::string& what)
      : std::runtime_error("kernel failed for procedure " + std::to_string(procedure) + ": " +
                           what),
        procedure_(procedure) {}
  std::size_t procedure() const { return procedure_; }

 private:
  std::size_t procedure_;
};

/// Result of one submitted task; resolves at most once through await().
class CompletionHandle {
 public:
  CompletionHandle(CompletionHandle&&) = default;
  CompletionHandle& operator=(CompletionHandle&&) = default;
  CompletionHandle(const CompletionHandle&) = delete;
  CompletionHandle& operator=(const CompletionHandle&) = delete;

  /// Blocks the awaiting task until kernel completion (virtually: until the
  /// kernel's slot in the device schedule has elapsed) and returns the result.
  std::pair<linalg::ComplexMatrix, KernelRecord> await();

  /// Virtual time at which the kernel completed on the device timeline.
  VirtualTime completed_at() const { return completed_at_; }

 private:
  friend class VirtualDevice;
  CompletionHandle() = default;

  bool awaited_ = false;
  std::optional<linalg::ComplexMatrix> result_;
  KernelRecord record_;
  VirtualTime completed_at_{0};
  std::exception_ptr error_;
};

struct BatchResult {
  std::vector<linalg::ComplexMatrix> results;
  std::vector<KernelRecord> records;
  VirtualTime started_at{0};
  VirtualTime completed_at{0};
};

/// A capacity-limited execution resource standing in for one GPU.
///
/// Kernels are executed for real (results are exact, durations measured with a
/// monotonic clock) while admission follows the device's virtual timeline:
/// FIFO among queued jobs, at most `slots` resident jobs in shared-context
/// mode, one in exclusive-context mode. A batch occupies the device as a
/// single job and spreads its entries over `workers` lanes; a tasked kernel
/// runs on one lane. Thread safe for any number of concurrent submitters.
class VirtualDevice {
 public:
  VirtualDevice(std::size_t id, std::size_t slots, std::size_t workers, DeviceMode mode);
  ~VirtualDevice();

  VirtualDevice(const VirtualDevice&) = delete;
  VirtualDevice& operator=(const VirtualDevice&) = delete;

  /// Submit at the device's current submission frontier.
  CompletionHandle submit(GemmTask task);
  /// Submit at an explicit point on the timeline. Callers that keep their own
  /// task clocks (the bench orchestrator) must submit in nondecreasing order;
  /// earlier timestamps are clamped to the frontier.
  CompletionHandle submit_at(GemmTask task, VirtualTime when);

  /// Executes the batch as one device-exclusive job; results ordered as the
  /// inputs. Blocks the caller until the whole batch completes.
  std::vector<linalg::ComplexMatrix> batched_gemm(GemmBatch batch);
  BatchResult batched_gemm_at(GemmBatch batch, VirtualTime when);

  /// Refuse further submissions.
  void shutdown();

  /// Aggregate metrics over every completed kernel. Requires at least one.
  DeviceMetrics metrics() const;
  std::vector<KernelRecord> records() const;

  std::size_t id() const { return id_; }
  std::size_t slots() const { return slots_; }
  std::size_t workers() const { return workers_; }
  DeviceMode mode() const { return mode_; }

  /// Default slot count: one slot per physical core per device.
  static std::size_t default_slots(std::size_t device_count);

 private:
  struct Interval {
    VirtualTime start;
    VirtualTime end;
  };

  // Fixes the job's start time per FIFO admission; returns it. Caller must
  // hold the lock and own the current admission turn.
  VirtualTime admit_locked(std::unique_lock<std::mutex>& lock, VirtualTime submit_vt,
                           bool needs_idle_device);
  void commit_locked(VirtualTime start, VirtualTime end);

  const std::size_t id_;
  const std::size_t slots_;
  const std::size_t workers_;
  const DeviceMode mode_;

  mutable std::mutex mutex_;
  std::condition_variable turn_cv_;
  std::condition_variable commit_cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t admission_turn_ = 0;
  VirtualTime submit_frontier_{0};
  VirtualTime last_start_{0};
  std::size_t executing_jobs_ = 0;
  bool shutdown_ = false;
  std::vector<Interval> job_intervals_;
  std::vector<KernelRecord> records_;
};

/// Where a procedure's GEMMs go, and that procedure's position on the
/// simulated timeline. Implementations stamp origin_procedure themselves.
class GemmExecutor {
 public:
  virtual ~GemmExecutor() = default;
  virtual linalg::ComplexMatrix run(GemmTask task) = 0;
  virtual VirtualTime now() = 0;
};

/// Runs GEMMs inline on the calling thread; timeline = real elapsed time.
class DirectExecutor : public GemmExecutor {
 public:
  DirectExecutor();
  linalg::ComplexMatrix run(GemmTask task) override;
  VirtualTime now() override;

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Submits each GEMM to a device at the device frontier and awaits it.
class DeviceExecutor : public GemmExecutor {
 public:
  DeviceExecutor(VirtualDevice& device, std::size_t procedure);
  linalg::ComplexMatrix run(GemmTask task) override;
  VirtualTime now() override;

 private:
  VirtualDevice& device_;
  std::size_t procedure_;
  std::chrono::steady_clock::time_point origin_;
};

}  // namespace taskgemm::exec

#endif
