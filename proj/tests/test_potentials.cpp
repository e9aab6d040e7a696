#include <doctest.h>

#include "mfl/ensemble.hpp"
#include "mfl/potentials.hpp"
#include "mfl/rng.hpp"

using namespace mfl;

namespace {

ParticleEnsemble random_ensemble(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return init_ensemble({IsotropicGaussian{{}, 1.0, {}, 1.0}, seed}, n, dim);
}

}  // namespace

TEST_CASE("intrinsic derivative, hand values") {
  ParticleEnsemble e = ParticleEnsemble::zeros(2, 2);
  Vector x(2);
  x << 2, 3;
  CHECK(intrinsic_derivative(QuadraticConfinement{1.0}, e, x) == x);

  e.positions() << 1, 0, 1, 0;
  CHECK(intrinsic_derivative(MeanAttraction{1.0, 0.5}, e, Vector::Zero(2)).isApprox(
      Vector{{-0.5, 0.0}}));
}

TEST_CASE("alpha = 0 reduces to the quadratic variant") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const ParticleEnsemble e = random_ensemble(5, 3, s);
    const Vector x = e.positions().row(0).transpose() * 1.7;
    CHECK(intrinsic_derivative(MeanAttraction{1.3, 0.0}, e, x) ==
          intrinsic_derivative(QuadraticConfinement{1.3}, e, x));
  }
}

TEST_CASE("potential values") {
  ParticleEnsemble e = ParticleEnsemble::zeros(3, 2);
  e.positions() << 1, 0, 0, 1, -1, 0;
  CHECK(potential_value(QuadraticConfinement{2.0}, e) == doctest::Approx(1.0));
  CHECK(potential_value(MeanAttraction{1.0, 5.0}, ParticleEnsemble::zeros(4, 2)) == 0.0);
  ParticleEnsemble f = ParticleEnsemble::zeros(2, 1);
  f.positions() << 0, 2;
  CHECK(potential_value(MeanAttraction{1.0, 1.0}, f) == doctest::Approx(0.5));
}

TEST_CASE("finite-difference consistency") {
  const ParticleEnsemble e = random_ensemble(50, 3, 17);
  CHECK(fd_consistency_check(QuadraticConfinement{1.0}, e, 4) <= 1e-6);
  CHECK(fd_consistency_check(MeanAttraction{1.0, 0.7}, e, 9) <= 1e-6);
  const ParticleEnsemble single = ParticleEnsemble::zeros(1, 2);
  CHECK(fd_consistency_check(QuadraticConfinement{1.0}, single, 0, 0.3) <= 1e-14);
}

TEST_CASE("gan drift field matches the per-point derivative") {
  auto samples = std::make_shared<GanSamples>();
  Rng r = make_stream(3, Purpose::kGeneric);
  for (int i = 0; i < 40; ++i) {
    samples->target.push_back(3.0 * r.normal());
    samples->generated.push_back(2.0 * r.normal());
  }
  const GanDiscriminator gan{samples, 1.5, 0.1};
  const ParticleEnsemble e = random_ensemble(20, 3, 2);
  const Matrix field = drift_field(gan, e.positions());
  for (Eigen::Index i = 0; i < e.positions().rows(); ++i) {
    const Vector direct = intrinsic_derivative(gan, e, e.positions().row(i).transpose());
    CHECK((field.row(i).transpose() - direct).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("potential validation") {
  CHECK_THROWS_AS(validate(QuadraticConfinement{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(GanDiscriminator{}), std::invalid_argument);
  CHECK_THROWS_AS(confinement(GanDiscriminator{}), std::invalid_argument);
}
