#include "mfl/integrator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mfl/rng.hpp"

namespace mfl {

void DynamicsParams::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be > 0");
  if (!(gamma * dt < 2.0)) throw std::invalid_argument("gamma * dt must be < 2");
}

namespace {

// Velocity half kicks; `drift` holds D_mF at the current positions.
void first_half_kick(Matrix& v, const Matrix& drift, const DynamicsParams& params,
                     std::uint64_t seed, std::uint64_t step) {
  const double half = 0.5 * params.dt;
  const double noise = params.sigma / std::sqrt(2.0) * std::sqrt(params.dt);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    Rng rng = make_stream(seed, Purpose::kKickFirst, static_cast<std::uint64_t>(i), step);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double xi = rng.normal();
      v(i, j) += half * (-drift(i, j) - params.gamma * v(i, j)) + noise * xi;
    }
  }
}

void second_half_kick(Matrix& v, const Matrix& drift, const DynamicsParams& params,
                      std::uint64_t seed, std::uint64_t step) {
  const double half = 0.5 * params.dt;
  const double noise = params.sigma / std::sqrt(2.0) * std::sqrt(params.dt);
  const double damping = 1.0 / (1.0 + params.gamma * half);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    Rng rng = make_stream(seed, Purpose::kKickSecond, static_cast<std::uint64_t>(i), step);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double xi = rng.normal();
      v(i, j) = (v(i, j) - half * drift(i, j) + noise * xi) * damping;
    }
  }
}

Matrix step_in_place(ParticleEnsemble& e, const Potential& p, const DynamicsParams& params,
                     std::uint64_t seed, std::uint64_t step, const Matrix& drift) {
  first_half_kick(e.velocities(), drift, params, seed, step);
  e.positions() += (params.dt * params.speed) * e.velocities();
  Matrix refreshed = drift_field(p, e.positions());
  second_half_kick(e.velocities(), refreshed, params, seed, step);
  return refreshed;
}

}  // namespace

ParticleEnsemble bbk_step(const ParticleEnsemble& e, const Potential& p,
                          const DynamicsParams& params, std::uint64_t seed, std::uint64_t step) {
  params.validate();
  ParticleEnsemble next = e;
  step_in_place(next, p, params, seed, step, drift_field(p, e.positions()));
  next.require_finite("after BBK step " + std::to_string(step));
  return next;
}

BbkIntegrator::BbkIntegrator(Potential potential, DynamicsParams params, std::uint64_t seed)
    : potential_(std::move(potential)), params_(params), seed_(seed) {
  params_.validate();
}

void BbkIntegrator::advance(ParticleEnsemble& e) {
  if (!drift_) drift_ = drift_field(potential_, e.positions());
  drift_ = step_in_place(e, potential_, params_, seed_, step_, *drift_);
  if (!e.all_finite()) {
    throw std::runtime_error("non-finite particle state after BBK step " +
                             std::to_string(step_));
  }
  ++step_;
}

Trajectory simulate(const InitSpec& init, const Potential& p, const DynamicsParams& params,
                    const SimulationOptions& options) {
  if (options.record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  ParticleEnsemble e = init_ensemble(init, options.count, options.dim);
  BbkIntegrator integrator(p, params, init.seed);

  Trajectory out{{}, e};
  const auto record = [&](std::size_t step) {
    FreeEnergyOptions diag = options.diagnostics;
    diag.seed = mix64(init.seed ^ (0xD1B54A32D192ED03ull * (step + 1)));
    DiagnosticsRow row = free_energy(e, p, params.gamma, params.sigma, diag);
    row.time = static_cast<double>(step) * params.dt;
    if (options.reference_x0) {
      row.w1_ref = wasserstein1_1d(column(e.positions(), 0), *options.reference_x0);
    }
    out.rows.push_back(row);
  };

  record(0);
  for (std::size_t s = 1; s <= params.steps; ++s) {
    integrator.advance(e);
    if (s % options.record_every == 0 || s == params.steps) record(s);
  }
  out.final_state = std::move(e);
  return out;
}

}  // namespace mfl
