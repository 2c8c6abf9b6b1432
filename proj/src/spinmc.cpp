#include "taskgemm/spinmc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "taskgemm/errors.hpp"

namespace taskgemm::spinmc {

using linalg::Complex;
using linalg::ComplexMatrix;

BipartitionDims dims_for_spins(std::size_t spins) {
  if (spins < 2 || spins > 30) {
    throw ConfigError("spins out of range [2,30]: " + std::to_string(spins));
  }
  BipartitionDims d;
  d.d_a = std::size_t{1} << (spins / 2);
  d.d_b = std::size_t{1} << (spins - spins / 2);
  d.gemm_m = d.d_a;
  d.gemm_n = d.d_a;
  d.gemm_k = d.d_b;
  return d;
}

SpinChainState product_state(std::size_t spins) {
  dims_for_spins(spins);
  SpinChainState s;
  s.spins = spins;
  s.amplitudes.assign(std::size_t{1} << spins, Complex{0.0, 0.0});
  s.amplitudes[0] = Complex{1.0, 0.0};
  return s;
}

SpinChainState random_state(std::size_t spins, rng::RandomStream& stream) {
  dims_for_spins(spins);
  SpinChainState s;
  s.spins = spins;
  s.amplitudes.resize(std::size_t{1} << spins);
  for (auto& amp : s.amplitudes) {
    auto [re, im] = stream.standard_normal_pair();
    amp = Complex{re, im};
  }
  renormalize(s);
  return s;
}

double state_norm(const SpinChainState& state) {
  double sum = 0.0;
  for (const Complex& amp : state.amplitudes) sum += std::norm(amp);
  return std::sqrt(sum);
}

void renormalize(SpinChainState& state) {
  const double inv = 1.0 / state_norm(state);
  for (Complex& amp : state.amplitudes) amp *= inv;
}

double max_entropy_bound(std::size_t spins) {
  return static_cast<double>(spins / 2) * std::numbers::ln2;
}

linalg::ComplexMatrix haar_two_site_unitary(rng::RandomStream& stream) {
  constexpr std::size_t kDim = 4;
  ComplexMatrix g(kDim, kDim);
  for (std::size_t j = 0; j < kDim; ++j) {
    for (std::size_t i = 0; i < kDim; ++i) {
      auto [re, im] = stream.standard_normal_pair();
      g(i, j) = Complex{re, im};
    }
  }
  // Modified Gram-Schmidt QR. The diagonal of R is the (real, positive)
  // residual norm, so R_jj/|R_jj| = 1 holds by construction and Q is Haar.
  ComplexMatrix q = g;
  for (std::size_t j = 0; j < kDim; ++j) {
    for (std::size_t prev = 0; prev < j; ++prev) {
      Complex proj{0.0, 0.0};
      for (std::size_t i = 0; i < kDim; ++i) proj += std::conj(q(i, prev)) * q(i, j);
      for (std::size_t i = 0; i < kDim; ++i) q(i, j) -= proj * q(i, prev);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) nrm += std::norm(q(i, j));
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < kDim; ++i) q(i, j) /= nrm;
  }
  return q;
}

void apply_two_site_gate_into(const SpinChainState& state, std::size_t site,
                              const linalg::ComplexMatrix& u, SpinChainState& dst) {
  const std::size_t spins = state.spins;
  if (site + 2 > spins) {
    throw std::invalid_argument("apply_two_site_gate: site " + std::to_string(site) +
                                " out of range [0," + std::to_string(spins - 2) + "]");
  }
  if (u.rows() != 4 || u.cols() != 4) {
    throw std::invalid_argument("apply_two_site_gate: gate must be 4x4");
  }
  dst.spins = spins;
  dst.amplitudes.resize(state.amplitudes.size());

  double ur[4][4];
  double ui[4][4];
  for (std::size_t x = 0; x < 4; ++x) {
    for (std::size_t y = 0; y < 4; ++y) {
      ur[x][y] = u(x, y).real();
      ui[x][y] = u(x, y).imag();
    }
  }

  const std::size_t groups = std::size_t{1} << (spins - 2);
  const std::size_t lo_mask = (std::size_t{1} << site) - 1;
  const std::size_t bit0 = std::size_t{1} << site;
  const std::size_t bit1 = std::size_t{1} << (site + 1);
  const Complex* src = state.amplitudes.data();
  Complex* out = dst.amplitudes.data();
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = ((g >> site) << (site + 2)) | (g & lo_mask);
    const std::size_t idx[4] = {base, base | bit0, base | bit1, base | bit0 | bit1};
    double vr[4], vi[4];
    for (std::size_t y = 0; y < 4; ++y) {
      vr[y] = src[idx[y]].real();
      vi[y] = src[idx[y]].imag();
    }
    for (std::size_t x = 0; x < 4; ++x) {
      double re = 0.0, im = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        re += ur[x][y] * vr[y] - ui[x][y] * vi[y];
        im += ur[x][y] * vi[y] + ui[x][y] * vr[y];
      }
      out[idx[x]] = Complex{re, im};
    }
  }
}

SpinChainState apply_two_site_gate(const SpinChainState& state, std::size_t site,
                                   const linalg::ComplexMatrix& u) {
  SpinChainState dst;
  apply_two_site_gate_into(state, site, u, dst);
  return dst;
}

linalg::ComplexMatrix bipartite_matrix(const SpinChainState& state) {
  const BipartitionDims d = dims_for_spins(state.spins);
  return ComplexMatrix(d.d_a, d.d_b, state.amplitudes);
}

double entanglement_entropy(const SpinChainState& state, EntropyKind kind,
                            exec::GemmExecutor& executor) {
  const double nrm = state_norm(state);
  if (std::abs(nrm - 1.0) > 1e-9) {
    throw std::invalid_argument("entanglement_entropy: state not normalized (||psi|| = " +
                                std::to_string(nrm) + ")");
  }
  ComplexMatrix psi = bipartite_matrix(state);
  exec::GemmTask task;
  task.alpha = Complex{1.0, 0.0};
  task.beta = Complex{0.0, 0.0};
  task.b = psi.adjoint();
  task.c = ComplexMatrix::zeros(psi.rows(), psi.rows());
  task.a = std::move(psi);
  ComplexMatrix rho = executor.run(std::move(task));

  double entropy = 0.0;
  if (kind == EntropyKind::kVonNeumann) {
    for (double lambda : linalg::hermitian_eigenvalues(rho)) {
      if (lambda > 1e-15) entropy -= lambda * std::log(lambda);
    }
  } else {
    const double f = linalg::frobenius_norm(rho);
    entropy = -std::log(f * f);
  }
  return std::max(entropy, 0.0);
}

double temperature(const AnnealSchedule& schedule, std::size_t step, std::size_t total_steps) {
  if (step >= total_steps) {
    throw std::invalid_argument("temperature: step must be < total_steps");
  }
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return schedule.t0 * std::pow(schedule.t_min / schedule.t0, frac);
}

double acceptance_probability(double delta, double t) {
  double x = delta / t;
  x = std::min(x, 0.0);
  x = std::max(x, -745.0);
  return std::exp(x);
}

StepOutcome metropolis_step(SpinChainState& state, SpinChainState& scratch,
                            double current_entropy, std::size_t step_index,
                            std::size_t total_steps, const AnnealSchedule& schedule,
                            rng::RandomStream& stream, EntropyKind kind, Objective objective,
                            exec::GemmExecutor& executor) {
  const std::size_t site = stream.uniform_index(state.spins - 1);
  const ComplexMatrix u = haar_two_site_unitary(stream);
  apply_two_site_gate_into(state, site, u, scratch);
  const double proposed = entanglement_entropy(scratch, kind, executor);

  const double delta =
      objective == Objective::kMaximize ? proposed - current_entropy : current_entropy - proposed;
  const double t = temperature(schedule, step_index, total_steps);
  const double p = acceptance_probability(delta, t);
  const bool accepted = stream.uniform01() < p;
  if (accepted) {
    std::swap(state.amplitudes, scratch.amplitudes);
    return {proposed, true};
  }
  return {current_entropy, false};
}

EntropyTrace mc_procedure(const McConfig& config, std::size_t procedure_index,
                          rng::RandomStream& stream, exec::GemmExecutor& executor) {
  dims_for_spins(config.spins);
  if (config.schedule.t0 <= 0.0 || config.schedule.t_min <= 0.0 ||
      config.schedule.t_min > config.schedule.t0) {
    throw ConfigError("anneal schedule requires 0 < t_min <= t0");
  }

  EntropyTrace trace;
  trace.procedure_index = procedure_index;
  trace.entropies.reserve(config.steps);
  trace.accepted_flags.reserve(config.steps);
  trace.wall_times.reserve(config.steps);

  SpinChainState state = config.initial_state == InitialState::kProduct
                             ? product_state(config.spins)
                             : random_state(config.spins, stream);
  SpinChainState scratch = state;

  double current = entanglement_entropy(state, config.entropy_kind, executor);
  trace.initial_entropy = current;

  for (std::size_t s = 0; s < config.steps; ++s) {
    const exec::VirtualTime step_start = executor.now();
    const StepOutcome outcome =
        metropolis_step(state, scratch, current, s, config.steps, config.schedule, stream,
                        config.entropy_kind, config.objective, executor);
    current = outcome.entropy;
    trace.entropies.push_back(outcome.entropy);
    trace.accepted_flags.push_back(outcome.accepted);
    trace.wall_times.push_back(executor.now() - step_start);
    if (config.renormalize_interval > 0 && (s + 1) % config.renormalize_interval == 0) {
      renormalize(state);
    }
  }
  return trace;
}

double average_entropy(const std::vector<EntropyTrace>& traces) {
  if (traces.empty()) {
    throw std::invalid_argument("average_entropy: need at least one trace");
  }
  const std::size_t len = traces.front().entropies.size();
  double sum = 0.0;
  for (const EntropyTrace& t : traces) {
    if (t.entropies.empty()) {
      throw std::invalid_argument("average_entropy: traces must be non-empty");
    }
    if (t.entropies.size() != len) {
      throw std::invalid_argument("average_entropy: traces must have equal length");
    }
    sum += t.entropies.back();
  }
  return sum / static_cast<double>(traces.size());
}

}  // namespace taskgemm::spinmc
