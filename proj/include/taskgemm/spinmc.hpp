#ifndef TASKGEMM_SPINMC_HPP
#define TASKGEMM_SPINMC_HPP

#include <cstddef>
#include <vector>

#include "taskgemm/exec.hpp"
#include "taskgemm/linalg.hpp"
#include "taskgemm/rng.hpp"

namespace taskgemm::spinmc {

/// Statevector of an S-spin chain. Spin q corresponds to bit q of the
/// amplitude index (spin 0 = least significant bit).
struct SpinChainState {
  std::size_t spins = 0;
  std::vector<linalg::Complex> amplitudes;
};

/// Bipartition of the chain into subsystem A (low floor(S/2) spins) and B
/// (high ceil(S/2) spins), and the GEMM shape it induces: the reduced density
/// matrix is formed as Psi * Psi^dagger with Psi of shape d_a x d_b, i.e.
/// (M, N, K) = (d_a, d_a, d_b).
struct BipartitionDims {
  std::size_t d_a = 0;
  std::size_t d_b = 0;
  std::size_t gemm_m = 0;
  std::size_t gemm_n = 0;
  std::size_t gemm_k = 0;
};

enum class EntropyKind { kVonNeumann, kRenyi2 };
enum class Objective { kMaximize, kMinimize };
enum class InitialState { kProduct, kRandom };

/// Geometric cooling schedule: temperature(s) = t0 * (t_min/t0)^(s/total).
struct AnnealSchedule {
  double t0 = 1.0;
  double t_min = 1e-3;
};

/// One procedure's trajectory. All arrays share length N_s; the per-step
/// entropy is the post-decision current entropy in nats.
struct EntropyTrace {
  std::size_t procedure_index = 0;
  double initial_entropy = 0.0;
  std::vector<double> entropies;
  std::vector<bool> accepted_flags;
  std::vector<exec::VirtualTime> wall_times;
};

BipartitionDims dims_for_spins(std::size_t spins);

/// |0...0>: amplitude 1 at index 0.
SpinChainState product_state(std::size_t spins);

/// i.i.d. complex Gaussian amplitudes, normalized.
SpinChainState random_state(std::size_t spins, rng::RandomStream& stream);

/// Haar-distributed 4x4 unitary: QR of a complex Ginibre matrix with the
/// R-diagonal phase fixed to 1 (columns drawn as 16 normal pairs in
/// column-major order).
linalg::ComplexMatrix haar_two_site_unitary(rng::RandomStream& stream);

/// Applies U to spins (site, site+1); the 4-dim gate basis index is
/// bit(site) + 2*bit(site+1).
SpinChainState apply_two_site_gate(const SpinChainState& state, std::size_t site,
                                   const linalg::ComplexMatrix& u);

/// Same, writing every amplitude of the result into dst (no aliasing with
/// state). dst is resized as needed.
void apply_two_site_gate_into(const SpinChainState& state, std::size_t site,
                              const linalg::ComplexMatrix& u, SpinChainState& dst);

/// Psi[a, b] = psi[a + b*d_a]; the matrix storage is the amplitude vector.
linalg::ComplexMatrix bipartite_matrix(const SpinChainState& state);

double state_norm(const SpinChainState& state);
void renormalize(SpinChainState& state);

/// floor(S/2) * ln 2, the largest bipartite entropy an S-spin chain admits.
double max_entropy_bound(std::size_t spins);

/// Bipartite entanglement entropy in nats. The reduced density matrix is
/// always formed explicitly as Psi * Psi^dagger through one GEMM submitted to
/// the supplied executor; that GEMM is the workload under study and is never
/// shortcut. Von Neumann drops eigenvalues <= 1e-15 from -sum lambda ln lambda;
/// Renyi-2 returns -ln ||rho||_F^2.
double entanglement_entropy(const SpinChainState& state, EntropyKind kind,
                            exec::GemmExecutor& executor);

double temperature(const AnnealSchedule& schedule, std::size_t step, std::size_t total_steps);

/// min(1, exp(delta / t)) with the exponent clamped to [-745, 0].
double acceptance_probability(double delta, double t);

struct StepOutcome {
  double entropy = 0.0;
  bool accepted = false;
};

/// One Metropolis step: picks a site uniformly in [0, S-2], draws a Haar
/// unitary, proposes into `scratch`, and accepts with probability
/// min(1, exp(delta/T)) where delta = +(e'-e) when maximizing and -(e'-e)
/// when minimizing. On accept the buffers swap; on reject `state` is
/// untouched and the current entropy is returned.
StepOutcome metropolis_step(SpinChainState& state, SpinChainState& scratch,
                            double current_entropy, std::size_t step_index,
                            std::size_t total_steps, const AnnealSchedule& schedule,
                            rng::RandomStream& stream, EntropyKind kind, Objective objective,
                            exec::GemmExecutor& executor);

struct McConfig {
  std::size_t spins = 6;
  std::size_t steps = 0;
  EntropyKind entropy_kind = EntropyKind::kVonNeumann;
  Objective objective = Objective::kMaximize;
  AnnealSchedule schedule;
  InitialState initial_state = InitialState::kProduct;
  std::size_t renormalize_interval = 1000;
};

/// One full annealing trajectory: initial state from the configured provider,
/// N_s Metropolis steps, per-step entropy / acceptance / wall time recorded.
EntropyTrace mc_procedure(const McConfig& config, std::size_t procedure_index,
                          rng::RandomStream& stream, exec::GemmExecutor& executor);

/// Mean over procedures of each trace's final entropy.
double average_entropy(const std::vector<EntropyTrace>& traces);

}  // namespace taskgemm::spinmc

#endif
