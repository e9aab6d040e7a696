#pragma once

// Reference computations the library code is checked against. Nothing here
// calls into mfl; each oracle is an independent route to the same number.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

/// Classical RK4 for y' = f(y).
inline Eigen::VectorXd rk4(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                           Eigen::VectorXd y, double dt, std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) {
    const Eigen::VectorXd k1 = f(y);
    const Eigen::VectorXd k2 = f(y + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(y + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

/// Drift matrix of the particle mean of dX = s V, dV = -(lambda X - alpha E X) - gamma V.
inline Eigen::Matrix2d mean_ode(double lambda, double alpha, double gamma, double speed) {
  Eigen::Matrix2d B;
  B << 0.0, speed, -(lambda - alpha), -gamma;
  return B;
}

/// Mean and covariance at time t of dm = B m dt + G dW with m(0) ~ (m0, S0).
/// The noise integral int_0^t e^{Bs} G G^T e^{B^T s} ds comes from one block
/// exponential (Van Loan).
struct LinearGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
inline LinearGaussian linear_sde_moments(const Eigen::MatrixXd& B, const Eigen::MatrixXd& GGt,
                                         const Eigen::VectorXd& m0, const Eigen::MatrixXd& S0,
                                         double t) {
  const Eigen::Index n = B.rows();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  C.topLeftCorner(n, n) = -B;
  C.topRightCorner(n, n) = GGt;
  C.bottomRightCorner(n, n) = B.transpose();
  const Eigen::MatrixXd E = (C * t).exp();
  const Eigen::MatrixXd F22 = E.bottomRightCorner(n, n);
  const Eigen::MatrixXd F12 = E.topRightCorner(n, n);
  const Eigen::MatrixXd eBt = F22.transpose();
  return {eBt * m0, eBt * S0 * eBt.transpose() + F22.transpose() * F12};
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value with the
/// Stephens small-sample correction.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
inline double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

/// Differential entropy E[ln rho] of N(0, var) in one dimension.
inline double gaussian_neg_entropy(double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

/// Composite Gauss-Legendre (5 points) of f on [a, b] with `panels` panels.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        std::size_t panels) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                              -0.9061798459386640, 0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                              0.2369268850561891, 0.2369268850561891};
  const double hw = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * hw;
    for (int k = 0; k < 5; ++k) sum += w[k] * f(mid + 0.5 * hw * x[k]);
  }
  return 0.5 * hw * sum;
}

/// The concave distance profile built by brute-force quadrature in plain
/// doubles; only usable where phi(2M) does not underflow.
struct HProfile {
  double a, S, J_total;
  std::size_t panels;
  HProfile(double eta, double sigma, double theta, double M, std::size_t panels_ = 4000)
      : a(theta / (4.0 * eta * eta * sigma * sigma)), S(2.0 * M), panels(panels_) {
    J_total = integrate([&](double r) { return Phi(r) / phi(r); }, 0.0, S, panels);
  }
  double phi(double s) const { return std::exp(-a * s * s); }
  double Phi(double r) const {
    return 0.5 * std::sqrt(std::numbers::pi / a) * std::erf(std::sqrt(a) * r);
  }
  double g(double s) const {
    const double J = integrate([&](double r) { return Phi(r) / phi(r); }, 0.0, s, panels);
    return 1.0 - 0.5 * J / J_total;
  }
  double h(double l) const {
    const double top = std::min(l, S);
    return integrate([&](double s) { return phi(s) * g(s); }, 0.0, top, 200);
  }
};

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace oracle
