#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mfl/gan.hpp"
#include "mfl/potentials.hpp"
#include "mfl/rng.hpp"

using namespace mfl;

namespace {

Matrix random_positions(std::size_t n, std::uint64_t seed) {
  Rng r = make_stream(seed, Purpose::kGeneric);
  Matrix x(n, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * r.normal();
  return x;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double y : v) s += (y - m) * (y - m);
  return s / static_cast<double>(v.size());
}

MhConfig sampler(std::size_t chains) {
  MhConfig mh;
  mh.chains = chains;
  return mh;
}

}  // namespace

TEST_CASE("discriminator value") {
  const Matrix one{{1.0, 1.0, 0.0}};
  CHECK(discriminator_value(one, 0.5, 10.0) == doctest::Approx(0.5));
  CHECK(discriminator_value(one, 50.0, 10.0) == doctest::Approx(10.0));
  Matrix zero = random_positions(10, 1);
  zero.col(0).setZero();
  for (double y : {-20.0, -1.0, 0.0, 3.0, 50.0}) CHECK(DiscriminatorProfile(zero, 10.0)(y) == 0.0);
}

TEST_CASE("profile agrees with direct evaluation") {
  const Matrix x = random_positions(200, 2);
  const DiscriminatorProfile phi(x, 3.0);
  Rng r = make_stream(3, Purpose::kGeneric);
  for (int k = 0; k < 2000; ++k) {
    const double y = 6.0 * r.normal();
    REQUIRE(phi(y) == doctest::Approx(discriminator_value(x, y, 3.0)).epsilon(1e-11));
  }
}

TEST_CASE("generator log-density") {
  // Phi = 0: Gaussian with variance sigma0^2 / (2 lambda0).
  const double s0 = 0.1, l0 = 0.01;
  const double var = s0 * s0 / (2 * l0);
  for (double y : {-2.0, 0.3, 1.0}) {
    CHECK(generator_logdensity(0.0, y, s0, l0) - generator_logdensity(0.0, 0.0, s0, l0) ==
          doctest::Approx(-y * y / (2 * var)));
  }
  // Phi = y on its linear range: strictly decreasing.
  const Matrix lin{{1.0, 1.0, 0.0}};
  double prev = std::numeric_limits<double>::infinity();
  for (double y = 0.0; y <= 9.0; y += 0.01) {
    const double v = generator_logdensity(discriminator_value(lin, y, 10.0), y, s0, l0);
    REQUIRE(v < prev);
    prev = v;
  }
}

TEST_CASE("metropolis on the Gaussian response") {
  const auto logd = [](double y) { return generator_logdensity(0.0, y, 0.1, 0.01); };
  const MhConfig mh = sampler(10000);
  std::vector<double> chains(mh.chains, 3.0);
  double scale = mh.initial_scale;
  const MhReport rep = mh_sample(logd, chains, scale, mh.burn_in, mh, 7, 0);
  CHECK(std::fabs(mean(chains)) < 0.05);
  CHECK(variance(chains) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(rep.acceptance >= 0.15);
  CHECK(rep.acceptance <= 0.5);

  std::vector<double> again(mh.chains, 3.0);
  double scale2 = mh.initial_scale;
  mh_sample(logd, again, scale2, mh.burn_in, mh, 7, 0);
  CHECK(again == chains);

  // A constant shift of Phi leaves every accept/reject decision unchanged.
  const auto shifted = [](double y) { return generator_logdensity(5.0, y, 0.1, 0.01); };
  std::vector<double> moved(mh.chains, 3.0);
  double scale3 = mh.initial_scale;
  mh_sample(shifted, moved, scale3, mh.burn_in, mh, 7, 0);
  CHECK(moved == chains);
}

TEST_CASE("metropolis chains decorrelate") {
  const auto logd = [](double y) { return -y * y; };
  const MhConfig mh = sampler(4000);
  std::vector<double> chains(mh.chains);
  Rng r = make_stream(1, Purpose::kGeneric);
  for (double& c : chains) c = std::sqrt(0.5) * r.normal();
  const std::vector<double> start = chains;
  double scale = 1.0;
  mh_sample(logd, chains, scale, 50, mh, 3, 0);
  double cov = 0.0;
  for (std::size_t j = 0; j < chains.size(); ++j) cov += start[j] * chains[j];
  cov /= static_cast<double>(chains.size());
  CHECK(std::fabs(cov) < 0.5 * 0.5);
  CHECK(variance(chains) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("metropolis aborts when nothing is accepted") {
  const auto spike = [](double y) { return y == 0.0 ? 0.0 : -1e300; };
  MhConfig mh = sampler(10);
  std::vector<double> chains(10, 0.0);
  double scale = 1.0;
  CHECK_THROWS_AS(mh_sample(spike, chains, scale, 5, mh, 1, 0), std::runtime_error);
}

TEST_CASE("quadrature quantiles of a Gaussian") {
  const auto logd = [](double y) { return -0.5 * (y - 1.0) * (y - 1.0) / 4.0; };
  const std::vector<double> q = quadrature_quantiles(logd, -30.0, 30.0, 20001, 5000);
  CHECK(mean(q) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(variance(q) == doctest::Approx(4.0).epsilon(1e-2));
  CHECK(std::is_sorted(q.begin(), q.end()));
}

TEST_CASE("discriminator drift") {
  const std::vector<double> ys{-1.0, 0.5, 2.0};
  const Eigen::Vector3d x(0.7, -0.4, 0.2);
  CHECK((dmF_gan(ys, ys, x, 10.0, 0.1) - 0.1 * x).norm() < 1e-15);

  const std::vector<double> target{1.0}, generated{0.0};
  const Eigen::Vector3d d = dmF_gan(generated, target, Eigen::Vector3d(1, 1, 0), 10.0, 0.0);
  CHECK(d(0) == doctest::Approx(1.0));
  CHECK(d(1) == doctest::Approx(1.0));
  CHECK(d(2) == doctest::Approx(0.0));
}

TEST_CASE("frozen-sample functional: finite differences") {
  auto samples = std::make_shared<GanSamples>();
  samples->target = sample_mixture(GanConfig{}.mixture, 100, 4);
  samples->generated = sample_mixture(std::vector<MixtureComponent>{{1.0, 0.0, 1.5}}, 100, 5);
  const GanDiscriminator gan{samples, 10.0, 0.1};
  const ParticleEnsemble e(random_positions(30, 8) * 0.5, Matrix::Zero(30, 3));
  for (std::size_t i = 0; i < 30; ++i) REQUIRE(fd_consistency_check(gan, e, i) <= 1e-4);
}

TEST_CASE("mixture sampling") {
  const std::vector<double> y = sample_mixture(GanConfig{}.mixture, 100000, 1);
  CHECK(mean(y) == doctest::Approx(1.5).epsilon(0.02));
  CHECK(variance(y) == doctest::Approx(1.0 + 6.25).epsilon(0.02));
}

TEST_CASE("uphill fraction") {
  std::vector<EnergyRow> rows(5);
  const double p[5] = {1.0, 0.8, 0.9, 0.5, 0.52};
  for (int k = 0; k < 5; ++k) {
    rows[k].potential = p[k];
    rows[k].potential_se = 0.01;
  }
  CHECK(uphill_fraction(rows) == doctest::Approx(0.25));
  CHECK(uphill_fraction(rows, 3.0, 2) == 0.0);
}

TEST_CASE("zero-gap start stays within noise") {
  GanConfig c;
  c.particles = 100;
  c.init_stddev = 1e-3;
  c.max_steps = 100;
  c.stop_window = 0;
  c.generator = GeneratorMode::kQuadrature;
  c.mh.chains = 2000;
  // Without discriminator noise the only force is the sampling gap itself.
  c.sigma1 = 0.0;
  // Target drawn from the Phi = 0 response N(0, sigma0^2 / (2 lambda0)).
  const std::vector<double> target = sample_mixture(std::vector<MixtureComponent>{{1.0, 0.0, std::sqrt(0.5)}}, 2000, 3);
  const GanResult r = train(c, &target);
  for (const EnergyRow& row : r.rows) {
    REQUIRE(std::fabs(row.potential) <= 5.0 * row.potential_se);
  }
}

TEST_CASE("energy bookkeeping and bounded kinetic energy") {
  GanConfig c;
  c.particles = 100;
  c.target_count = 200;
  c.mh.chains = 200;
  c.max_steps = 200;
  const GanResult r = train(c);
  REQUIRE(r.discriminator.has_value());
  const Matrix& x = r.discriminator->positions();
  double t = 0.0, g = 0.0;
  for (double y : r.target) t += discriminator_value(x, y, c.clip);
  for (double y : r.generated) g += discriminator_value(x, y, c.clip);
  t /= static_cast<double>(r.target.size());
  g /= static_cast<double>(r.generated.size());
  CHECK(r.rows.back().potential == doctest::Approx(t - g).epsilon(1e-10));
  CHECK(x.col(0).cwiseAbs().maxCoeff() <= c.c_max);

  std::vector<double> kin;
  for (const EnergyRow& row : r.rows) kin.push_back(row.kinetic);
  std::vector<double> sorted = kin;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  CHECK(*std::max_element(kin.begin(), kin.end()) <= 10.0 * sorted[sorted.size() / 2]);

  std::ostringstream out;
  write_energy_csv(out, r.rows);
  CHECK(out.str().rfind("step,potential,kinetic,lyapunov\n", 0) == 0);
}

TEST_CASE("training is deterministic") {
  GanConfig c;
  c.particles = 50;
  c.target_count = 100;
  c.mh.chains = 100;
  c.max_steps = 30;
  c.seed = 4;
  const GanResult a = train(c), b = train(c);
  CHECK(a.generated == b.generated);
  CHECK(a.rows.back().potential == b.rows.back().potential);
}

TEST_CASE("gan config validation") {
  GanConfig c;
  c.sigma0 = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = GanConfig{};
  c.mh.target_acceptance = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("log partition of a Gaussian") {
  const double lz = log_partition([](double y) { return -0.5 * y * y; }, -12.0, 12.0, 4001);
  CHECK(lz == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-10));
}

TEST_CASE("noiseless damped flow descends the lyapunov functional") {
  // The potential energy alone is not monotone here; the functional is.
  GanConfig c;
  c.sigma1 = 0.0;
  c.gamma = 50.0;
  c.generator = GeneratorMode::kQuadrature;
  c.particles = 200;
  c.max_steps = 600;
  c.stop_window = 0;
  const GanResult r = train(c);
  double worst = -1.0;
  for (std::size_t k = 1; k < r.rows.size(); ++k)
    worst = std::max(worst, r.rows[k].lyapunov - r.rows[k - 1].lyapunov);
  CHECK(worst <= 1e-9);
  CHECK(r.rows.back().lyapunov < r.rows.front().lyapunov);
}
