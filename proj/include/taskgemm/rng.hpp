#ifndef TASKGEMM_RNG_HPP
#define TASKGEMM_RNG_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>

namespace taskgemm::rng {

/// Identifies one per-procedure random stream under a global seed.
struct StreamSeed {
  std::uint64_t global_seed = 0;
  std::size_t procedure_index = 0;
};

/// xoshiro256++ stream. One stream is owned by exactly one procedure; streams
/// are never shared between tasks.
///
/// State derivation is a documented splitmix64-style avalanche mix: the
/// splitmix64 finalizer is applied to global_seed XOR mix64(procedure_index+1),
/// and four successive splitmix64 outputs seed the 256-bit state. The mapping
/// is deterministic within a build; bitwise equality across implementations is
/// not a goal.
class RandomStream {
 public:
  explicit RandomStream(StreamSeed seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01();

  /// Uniform in [0, n); bias-corrected by rejection against the largest
  /// multiple of n representable in 64 bits.
  std::size_t uniform_index(std::size_t n);

  /// Two independent standard normals by the Box-Muller transform:
  /// r = sqrt(-2 ln u1) with u1 in (0,1], returns (r cos 2*pi*u2, r sin 2*pi*u2).
  std::pair<double, double> standard_normal_pair();

 private:
  std::array<std::uint64_t, 4> state_;
};

inline RandomStream derive_stream(StreamSeed seed) { return RandomStream(seed); }

}  // namespace taskgemm::rng

#endif
