#include <doctest.h>

#include <complex>

#include "mfl/rates.hpp"
#include "mfl/rng.hpp"
#include "support/oracles.hpp"

using namespace mfl;

namespace {

std::vector<std::complex<double>> sorted(std::vector<std::complex<double>> v) {
  std::sort(v.begin(), v.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

std::vector<std::complex<double>> numeric_eigenvalues(double gamma, double lambda) {
  Eigen::Matrix3d A;
  A << -gamma, -lambda, 1.0, 2.0, -2.0 * gamma, 0.0, -2.0 * lambda, 0.0, 0.0;
  const Eigen::Vector3cd ev = Eigen::EigenSolver<Eigen::Matrix3d>(A).eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

// Distance from each closed-form eigenvalue to the nearest numeric one.
double eigen_mismatch(const DriftSpectrum& s) {
  const auto numeric = numeric_eigenvalues(s.gamma, s.lambda);
  double worst = 0.0;
  for (const auto& z : s.eigenvalues) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& w : numeric) nearest = std::min(nearest, std::abs(z - w));
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace

TEST_CASE("spectrum of A, worked cases") {
  const DriftSpectrum a = drift_matrix_eigen(3.0, 2.0);
  CHECK(a.regime == DampingRegime::kOverdamped);
  CHECK(eigen_mismatch(a) < 1e-10);
  const auto ea = sorted({a.eigenvalues.begin(), a.eigenvalues.end()});
  CHECK(ea[0].real() == doctest::Approx(-4.0));
  CHECK(ea[1].real() == doctest::Approx(-3.0));
  CHECK(ea[2].real() == doctest::Approx(-2.0));

  const DriftSpectrum b = drift_matrix_eigen(2.0, 2.0);
  CHECK(b.regime == DampingRegime::kUnderdamped);
  CHECK(eigen_mismatch(b) < 1e-10);
  const auto eb = sorted({b.eigenvalues.begin(), b.eigenvalues.end()});
  CHECK(eb[0].imag() == doctest::Approx(-2.0));
  CHECK(eb[2].imag() == doctest::Approx(2.0));
}

TEST_CASE("critical damping is shifted") {
  const DriftSpectrum s = drift_matrix_eigen(2.0, 1.0);
  CHECK(s.lambda_shifted);
  CHECK(s.lambda == doctest::Approx(1.0 - 1e-6));
  CHECK(s.regime == DampingRegime::kOverdamped);
}

TEST_CASE("closed-form spectrum and diagonalization on random pairs") {
  Rng r = make_stream(1, Purpose::kGeneric);
  for (int k = 0; k < 100; ++k) {
    const double gamma = 0.1 + 5.0 * r.uniform();
    const double lambda = 0.1 + 5.0 * r.uniform();
    const QuadraticForm G = build_G(gamma, lambda);
    CHECK(eigen_mismatch(G.spectrum) < 1e-10);
    const Eigen::Matrix3d residual = G.Q * G.spectrum.A - G.Lambda * G.Q;
    CHECK(residual.cwiseAbs().maxCoeff() / (G.Q.norm() * G.spectrum.A.norm()) < 1e-12);
  }
}

TEST_CASE("G hand values and coercivity") {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1(0) = 1.0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(build_G(3.0, 2.0)(e1, zero) == doctest::Approx(5.0));
  CHECK(build_G(2.0, 2.0)(e1, zero) == doctest::Approx(2.0));

  Rng r = make_stream(2, Purpose::kGeneric);
  for (const auto [gamma, lambda] : {std::pair{3.0, 2.0}, std::pair{2.0, 2.0}}) {
    const QuadraticForm G = build_G(gamma, lambda);
    CHECK(G.lambda_G > 0.0);
    for (int k = 0; k < 10000; ++k) {
      Eigen::VectorXd dx(5), p(5);
      for (int j = 0; j < 5; ++j) {
        dx(j) = r.normal();
        p(j) = r.normal();
      }
      const double w2 = dx.squaredNorm() + p.squaredNorm();
      const double g = G(dx, p);
      REQUIRE(g >= G.lambda_G * w2 * (1 - 1e-12));
      REQUIRE(g <= G.C_G * w2 * (1 + 1e-12));
      REQUIRE(G.from_invariants(dx.dot(p), dx.squaredNorm(), p.squaredNorm()) ==
              doctest::Approx(g).epsilon(1e-10));
    }
  }
}

TEST_CASE("h family against brute-force quadrature") {
  const double eta = 0.5, sigma = 1.0, theta = 2.0, M = 1.0;
  const HFamily h(eta, sigma, theta, M);
  const oracle::HProfile ref(eta, sigma, theta, M);
  CHECK(h.h(0.0) == 0.0);
  CHECK(h.h_prime(0.0) == doctest::Approx(1.0));
  CHECK(h.h_prime(2 * M) == doctest::Approx(h.phi_min().value() / 2).epsilon(1e-10));
  CHECK(h.phi_min().log_abs == doctest::Approx(-theta * M * M / (eta * eta * sigma * sigma)));
  CHECK(h.integral_Phi_over_phi().value() == doctest::Approx(ref.J_total).epsilon(1e-10));
  for (double l : {0.1, 0.5, 1.0, 1.7, 2.0}) {
    CHECK(h.Phi(l) == doctest::Approx(ref.Phi(l)).epsilon(1e-12));
    CHECK(h.g(l) == doctest::Approx(ref.g(l)).epsilon(1e-9));
    CHECK(h.h(l) == doctest::Approx(ref.h(l)).epsilon(1e-9));
  }
  CHECK(h.h(5.0) == h.h(2 * M));
  CHECK(h.kappa_bar().value() ==
        doctest::Approx(eta * eta * sigma * sigma / ref.J_total).epsilon(1e-10));
}

TEST_CASE("h shape and differential inequality") {
  const HFamily h(0.5, 1.0, 2.0, 1.0);
  const double two_eta2_sigma2 = 2.0 * 0.25;
  const double kappa = h.kappa_bar().value();
  double prev = 0.0, prev_slope = 1.0;
  for (int k = 1; k < 10000; ++k) {
    const double l = 2.0 * k / 10000.0;
    const double v = h.h(l), d = h.h_prime(l);
    REQUIRE(v >= prev);
    REQUIRE(d <= prev_slope * (1 + 1e-12));
    REQUIRE(v >= h.Phi(l) / 2 * (1 - 1e-12));
    REQUIRE(v <= h.Phi(l) * (1 + 1e-12));
    const double terms = std::fabs(2.0 * l * d) + std::fabs(two_eta2_sigma2 * h.h_second(l));
    const double residual = 2.0 * l * d + two_eta2_sigma2 * h.h_second(l) + kappa * v;
    REQUIRE(residual <= 1e-8 * (terms + kappa * v));
    prev = v;
    prev_slope = d;
  }
}

TEST_CASE("default constants") {
  RateInputs in;
  in.M = 1.0;
  const RateConstants k = assemble_constants(in);
  CHECK(k.c.positive());
  CHECK(k.c <= LogReal::from(k.G.gamma_bar / 2));
  CHECK(k.G.gamma_bar == doctest::Approx(2.0));
  CHECK(k.theta == doctest::Approx(1.0 / k.eta + 8.0 * k.G.Q_bar_norm));
  CHECK(k.h->log_integral_from_table() ==
        doctest::Approx(k.h->integral_Phi_over_phi().log_abs).epsilon(1e-9));
  CHECK(k.rate_at(LogReal::from(2.0) * k.iota_star).sign < 0);
  CHECK(k.rate_at(LogReal::from(0.5) * k.iota_star).positive());

  RateInputs tagged = in;
  tagged.dim = 100;
  const RateConstants k100 = assemble_constants(tagged);
  CHECK(k100.c.log_abs == k.c.log_abs);
  CHECK(k100.C0.log_abs == k.C0.log_abs);
}

TEST_CASE("iota above the threshold gives c <= 0") {
  RateInputs in;
  in.iota = 1e-3;
  CHECK_FALSE(assemble_constants(in).c.positive());
}

TEST_CASE("inconsistent inputs") {
  RateInputs in;
  in.sigma = -1.0;
  CHECK_THROWS_AS(assemble_constants(in), std::domain_error);
  in = RateInputs{};
  in.safety = 1.5;
  CHECK_THROWS_AS(assemble_constants(in), std::domain_error);
}

TEST_CASE("C0 audit at a moderate parameter set") {
  const QuadraticForm G = build_G(3.0, 2.0);
  const HFamily h(0.5, 1.0, 2.0, 1.0);
  const C0Inputs base{G.lambda_G, LogReal::from(0.1), 0.5, 1.0, &h};
  const LogReal C0 = find_C0(base);
  CHECK(C0 >= LogReal::from(1.0));
  C0Inputs doubled = base;
  doubled.beta = LogReal::from(0.2);
  CHECK(find_C0(doubled) <= C0);

  // r + u <= C0 (1 + beta G) h(r + eta u): the envelope only uses |dX|^2 + |P|^2.
  Rng r = make_stream(4, Purpose::kGeneric);
  for (int k = 0; k < 200000; ++k) {
    const double scale = std::exp(8.0 * r.uniform() - 6.0);
    const double rr = scale * r.uniform(), uu = scale * r.uniform();
    const double psi = (1.0 + 0.1 * G.lambda_G * (rr * rr + uu * uu)) * h.h(rr + 0.5 * uu);
    REQUIRE(rr + uu <= C0.value() * psi);
  }
}
