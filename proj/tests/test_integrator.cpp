#include <doctest.h>

#include <sstream>

#include "mfl/diagnostics.hpp"
#include "mfl/integrator.hpp"
#include "support/oracles.hpp"

using namespace mfl;

TEST_CASE("free flight") {
  ParticleEnsemble e = ParticleEnsemble::zeros(1, 1);
  e.velocities()(0, 0) = 1.0;
  const DynamicsParams p{0.0, 0.0, 1.0, 0.1, 1};
  // lambda = 0 is not a valid confinement, so use a mean attraction whose
  // single-particle drift vanishes identically.
  const ParticleEnsemble next = bbk_step(e, MeanAttraction{1.0, 1.0}, p, 0, 0);
  CHECK(next.positions()(0, 0) == doctest::Approx(0.1));
  CHECK(next.velocities()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("noiseless step against RK4") {
  const DynamicsParams p{1.0, 0.0, 1.0, 0.01, 1};
  const auto f = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd{{y(1), -y(0) - y(1)}};
  };
  ParticleEnsemble e = ParticleEnsemble::zeros(1, 1);
  e.positions()(0, 0) = 1.0;
  BbkIntegrator bbk(QuadraticConfinement{1.0}, p, 0);
  Eigen::VectorXd y{{1.0, 0.0}};
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    // Local error: restart the reference from the current state each step.
    y = Eigen::VectorXd{{e.positions()(0, 0), e.velocities()(0, 0)}};
    bbk.advance(e);
    const Eigen::VectorXd ref = oracle::rk4(f, y, p.dt / 10, 10);
    worst = std::max({worst, std::fabs(ref(0) - e.positions()(0, 0)),
                      std::fabs(ref(1) - e.velocities()(0, 0))});
  }
  CHECK(worst < 5.0 * p.dt * p.dt);

  // Global error after t = 1 is O(dt^2).
  ParticleEnsemble g = ParticleEnsemble::zeros(1, 1);
  g.positions()(0, 0) = 1.0;
  BbkIntegrator run(QuadraticConfinement{1.0}, p, 0);
  for (int s = 0; s < 100; ++s) run.advance(g);
  const Eigen::VectorXd exact = oracle::rk4(f, Eigen::VectorXd{{1.0, 0.0}}, 1e-4, 10000);
  CHECK(std::fabs(exact(0) - g.positions()(0, 0)) < p.dt * p.dt);
}

TEST_CASE("stateful integrator equals repeated steps") {
  const InitSpec init{IsotropicGaussian{{}, 1.0, {}, 1.0}, 4};
  ParticleEnsemble a = init_ensemble(init, 20, 2);
  ParticleEnsemble b = a;
  const DynamicsParams p{1.0, 1.0, 1.0, 0.01, 0};
  const MeanAttraction pot{1.0, 0.3};
  BbkIntegrator bbk(pot, p, 8);
  for (std::uint64_t s = 0; s < 25; ++s) {
    bbk.advance(a);
    b = bbk_step(b, pot, p, 8, s);
  }
  CHECK(a == b);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((DynamicsParams{1.0, 1.0, 1.0, -0.01, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((DynamicsParams{300.0, 1.0, 1.0, 0.01, 1}.validate()), std::invalid_argument);
  CHECK_NOTHROW((DynamicsParams{0.0, 0.0, 1.0, 0.01, 1}.validate()));
}

TEST_CASE("simulate: zero steps, determinism") {
  const InitSpec init{IsotropicGaussian{{}, 4.0, {}, 1.0}, 1};
  SimulationOptions o;
  o.count = 300;
  o.dim = 1;
  o.record_every = 10;
  o.diagnostics.bootstrap = 20;
  DynamicsParams p{1.0, 1.0, 1.0, 0.01, 0};
  CHECK(simulate(init, QuadraticConfinement{1.0}, p, o).rows.size() == 1);

  p.steps = 35;
  const Trajectory a = simulate(init, QuadraticConfinement{1.0}, p, o);
  const Trajectory b = simulate(init, QuadraticConfinement{1.0}, p, o);
  CHECK(a.rows.size() == 5);  // 0, 10, 20, 30 and the final step
  std::ostringstream sa, sb;
  write_trajectory_csv(sa, a.rows);
  write_trajectory_csv(sb, b.rows);
  CHECK(sa.str() == sb.str());
  CHECK(a.final_state == b.final_state);
}

TEST_CASE("divergence names the step") {
  const InitSpec init{IsotropicGaussian{{1.0}, 1.0, {}, 0.0}, 1};
  SimulationOptions o;
  o.count = 10;
  o.record_every = 1000;
  o.diagnostics.bootstrap = 0;
  // alpha >> lambda: exponential blow-up.
  const DynamicsParams p{0.01, 0.0, 1.0, 0.5, 100000};
  CHECK_THROWS_WITH_AS(simulate(init, MeanAttraction{1.0, 1e6}, p, o),
                       doctest::Contains("step"), std::runtime_error);
}
