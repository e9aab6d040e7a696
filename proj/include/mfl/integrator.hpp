#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfl/diagnostics.hpp"
#include "mfl/ensemble.hpp"
#include "mfl/potentials.hpp"

namespace mfl {

struct DynamicsParams {
  double gamma = 1.0;
  double sigma = 1.0;
  double speed = 1.0;  // position speed factor: dX = speed * V dt
  double dt = 0.01;
  std::size_t steps = 0;

  /// The step itself only needs gamma, sigma >= 0, dt > 0, gamma*dt < 2 and
  /// speed > 0. Run configs additionally demand gamma, sigma > 0.
  void validate() const;
};

/// One Brunger-Brooks-Karplus step: explicit half kick with friction and half
/// the noise, a position drift with the half-kicked velocity, then an implicit
/// damped half kick using the drift refreshed against the moved empirical law.
/// Noise for particle i at step s comes from streams keyed (seed, i, s).
ParticleEnsemble bbk_step(const ParticleEnsemble& e, const Potential& p,
                          const DynamicsParams& params, std::uint64_t seed, std::uint64_t step);

/// Stateful variant reusing the drift computed at the end of the previous
/// step. Results are identical to repeated bbk_step calls.
class BbkIntegrator {
 public:
  BbkIntegrator(Potential potential, DynamicsParams params, std::uint64_t seed);

  void advance(ParticleEnsemble& e);

  std::uint64_t step_index() const { return step_; }
  const DynamicsParams& params() const { return params_; }

 private:
  Potential potential_;
  DynamicsParams params_;
  std::uint64_t seed_;
  std::uint64_t step_ = 0;
  std::optional<Matrix> drift_;
};

struct SimulationOptions {
  std::size_t count = 1000;
  std::size_t dim = 1;
  std::size_t record_every = 100;
  FreeEnergyOptions diagnostics;
  /// When set, each row carries W1 between x_0 and this sample.
  std::optional<std::vector<double>> reference_x0;
};

struct Trajectory {
  std::vector<DiagnosticsRow> rows;
  ParticleEnsemble final_state;
};

/// Runs params.steps BBK steps from init_ensemble(init, count, dim) and records
/// a diagnostics row at step 0 and every record_every steps (and the last).
/// Deterministic given init.seed. Throws std::runtime_error naming the step
/// index when the state stops being finite.
Trajectory simulate(const InitSpec& init, const Potential& p, const DynamicsParams& params,
                    const SimulationOptions& options);

}  // namespace mfl
