#pragma once

#include <cstdint>

namespace mfl {

// Counter-based random streams. Every draw in a run is keyed by
// (seed, purpose, index, step) so that changing the particle count or the
// iteration order never perturbs unrelated draws.

std::uint64_t mix64(std::uint64_t x);

/// Tags separating independent uses of the same run seed.
enum class Purpose : std::uint64_t {
  kInit = 1,
  kKickFirst = 2,
  kKickSecond = 3,
  kCouplingReflect = 4,
  kCouplingSync = 5,
  kBootstrap = 6,
  kJitter = 7,
  kMetropolis = 8,
  kTargetSamples = 9,
  kGeneric = 10,
};

/// SplitMix64 generator with a ziggurat normal sampler.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), safe for log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal();

  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

Rng make_stream(std::uint64_t seed, Purpose purpose, std::uint64_t index = 0,
                std::uint64_t step = 0);

}  // namespace mfl
