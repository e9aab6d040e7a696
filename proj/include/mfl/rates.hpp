#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfl/log_real.hpp"

namespace mfl {

enum class DampingRegime {
  kOverdamped,  // gamma^2 > 4 lambda: three real eigenvalues
  kUnderdamped,  // gamma^2 < 4 lambda: one real eigenvalue, a conjugate pair
};

/// Linear drift of (z, r^2, u^2) for the coupled difference process,
/// z = dX.P, r = |dX|, u = |P|, P = dV + gamma dX.
struct DriftSpectrum {
  double gamma = 0.0;
  double lambda = 0.0;  // possibly shifted off gamma^2 = 4 lambda
  bool lambda_shifted = false;
  DampingRegime regime = DampingRegime::kOverdamped;
  Eigen::Matrix3d A;
  std::array<std::complex<double>, 3> eigenvalues;
};

/// Closed-form spectrum of A. On gamma^2 == 4 lambda (relative 1e-12) lambda
/// is reduced by 1e-6 lambda and the overdamped branch is used.
DriftSpectrum drift_matrix_eigen(double gamma, double lambda);

/// Quadratic Lyapunov form G(dX, P) = sum_j |Sigma (dX_j, P_j)|^2 built from
/// the spectral decomposition Q A = Lambda Q.
struct QuadraticForm {
  DriftSpectrum spectrum;
  Eigen::Matrix3d Q;
  Eigen::Matrix3d Lambda;  // diagonal, or real standard form of the pair
  Eigen::Matrix2d Sigma;
  double gamma_bar = 0.0;
  Eigen::RowVector3d Q_bar;
  double Q_bar_norm = 0.0;
  double lambda_G = 0.0;  // smallest eigenvalue of Sigma^T Sigma
  double C_G = 0.0;  // largest eigenvalue of Sigma^T Sigma

  double operator()(const Eigen::VectorXd& dX, const Eigen::VectorXd& P) const;
  /// Same form through its (z, r^2, u^2) representation, Q_bar . (z, r^2, u^2).
  double from_invariants(double z, double r2, double u2) const;
};

QuadraticForm build_G(double gamma, double lambda);

/// Profile functions of the concave distance h:
///   phi(s) = exp(-theta s^2 / (4 eta^2 sigma^2)),
///   Phi(r) = int_0^r phi,
///   g(s)   = 1 - (1/2) int_0^s Phi/phi / int_0^{2M} Phi/phi,
///   h(l)   = int_0^{min(l, 2M)} phi g.
/// Integrals of Phi/phi are stored scaled by phi(2M) so the construction
/// stays finite when phi(2M) underflows.
class HFamily {
 public:
  HFamily(double eta, double sigma, double theta, double M);

  double phi(double s) const;
  double Phi(double r) const;
  double g(double s) const;
  double h(double l) const;
  double h_prime(double l) const;  // left derivative; 0 beyond 2M
  /// h'' on (0, 2M): -2 a s phi g - Phi / int_0^{2M} Phi/phi.
  double h_second(double l) const;

  double a() const { return a_; }
  double M() const { return M_; }
  double h_at_2M() const { return h_2M_; }
  LogReal phi_min() const { return LogReal::from_log(-a_ * S_ * S_); }
  /// int_0^{2M} Phi/phi.
  LogReal integral_Phi_over_phi() const { return LogReal::from_log(log_integral_); }
  /// eta^2 sigma^2 / int_0^{2M} Phi/phi.
  LogReal kappa_bar() const;
  /// Same integral from the grid quadrature; must agree with the adaptive one.
  double log_integral_from_table() const { return a_ * S_ * S_ + std::log(table_scaled_integral_); }

 private:
  // int_s^t Phi(r) exp(a (r^2 - S^2)) dr by 8-point Gauss-Legendre.
  double scaled_integral(double s, double t) const;
  double panel_h(std::size_t k, double upto) const;

  double eta_, sigma_, theta_, M_, a_, S_;
  double log_integral_;  // adaptive Simpson
  double scaled_total_;  // int_0^S Phi e^{a(r^2-S^2)} dr, adaptive Simpson
  double table_scaled_integral_;
  std::vector<double> grid_;
  std::vector<double> J_;  // scaled Phi/phi integral at grid points
  std::vector<double> H_;  // h at grid points
  double h_2M_ = 0.0;
};

/// Adaptive Simpson on [a, b] to relative tolerance rel_tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int max_depth = 50);

struct RateInputs {
  double gamma = 3.0;
  double lambda = 2.0;
  double sigma = 1.0;
  double lipschitz_x = 0.0;  // L^x of the non-quadratic drift b
  double iota = 0.0;  // Lipschitz constant of b in the measure (W1)
  double M = 1.0;  // radius where b becomes eps0-Lipschitz, certified by caller
  double safety = 0.9;  // each strict upper bound is multiplied by this
  std::size_t dim = 1;  // echoed only; never enters the computation
};

struct RateConstants {
  RateInputs inputs;
  QuadraticForm G;
  double eps0 = 0.0;
  double eta = 0.0;
  double theta = 0.0;
  LogReal phi_min;
  LogReal kappa_bar_M;
  LogReal kappa_M;
  double C1 = 0.0;
  LogReal beta;
  double C_M = 0.0;
  LogReal C0;
  LogReal C2;
  double h_2M = 0.0;
  LogReal c;
  LogReal iota_star;  // largest iota with c > 0
  std::shared_ptr<const HFamily> h;

  /// c at another iota with every other constant held fixed.
  LogReal rate_at(double iota) const { return rate_at(LogReal::from(iota)); }
  LogReal rate_at(LogReal iota) const;
};

/// Assembles the constants in dependency order. Throws std::domain_error
/// naming the first violated constraint.
RateConstants assemble_constants(const RateInputs& in);

struct C0Inputs {
  double lambda_G;
  LogReal beta;
  double eta;
  double M;
  const HFamily* h;
};

/// sup over r, u > 0 of (r + u) / ((1 + beta lambda_G (r^2 + u^2)) h_low(r + eta u))
/// with h_low = Phi/2 on [0, 2M] and h(2M) beyond, padded by 1e-6 relative.
LogReal find_C0(const C0Inputs& in);

/// log psi(dX, dV) = log[(1 + beta G(dX, P)) h(eta |P| + |dX|)], P = dV + gamma dX.
double log_psi(const Eigen::VectorXd& dX, const Eigen::VectorXd& dV, const RateConstants& k);
double psi_distance(const Eigen::VectorXd& dX, const Eigen::VectorXd& dV, const RateConstants& k);

}  // namespace mfl
