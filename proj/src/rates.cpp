#include "mfl/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mfl {

namespace {

constexpr std::array<double, 4> kGaussNodes = {0.1834346424956498, 0.5255324099163290,
                                               0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kGaussWeights = {0.3626837833783620, 0.3137066458778873,
                                                 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(F&& f, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double total = 0.0;
  for (std::size_t k = 0; k < kGaussNodes.size(); ++k) {
    total += kGaussWeights[k] * (f(mid - half * kGaussNodes[k]) + f(mid + half * kGaussNodes[k]));
  }
  return total * half;
}

// log(1 + e^x) without overflow.
double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double simpson_recurse(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // A coarse Gauss-Legendre pass fixes the absolute scale of the tolerance.
  const double scale = std::max(std::fabs(gauss_legendre(f, a, b)), std::fabs(whole));
  const double tol = rel_tol * std::max(scale, std::numeric_limits<double>::min());
  const double value = simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
  if (!std::isfinite(value)) throw std::domain_error("adaptive_simpson: non-finite integrand");
  return value;
}

// ---------------------------------------------------------------------------

DriftSpectrum drift_matrix_eigen(double gamma, double lambda) {
  if (!(gamma > 0.0) || !(lambda > 0.0)) {
    throw std::domain_error("drift_matrix_eigen: gamma and lambda must be > 0");
  }
  DriftSpectrum s;
  s.gamma = gamma;
  s.lambda = lambda;
  const double disc = gamma * gamma - 4.0 * lambda;
  if (std::fabs(disc) <= 1e-12 * gamma * gamma) {
    s.lambda = lambda - 1e-6 * lambda;
    s.lambda_shifted = true;
  }
  const double l = s.lambda;
  s.A << -gamma, -l, 1.0,  //
      2.0, -2.0 * gamma, 0.0,  //
      -2.0 * l, 0.0, 0.0;
  const double d = gamma * gamma - 4.0 * l;
  if (d > 0.0) {
    const double root = std::sqrt(d);
    s.regime = DampingRegime::kOverdamped;
    s.eigenvalues = {std::complex<double>(-gamma, 0.0), std::complex<double>(-gamma + root, 0.0),
                     std::complex<double>(-gamma - root, 0.0)};
  } else {
    const double root = std::sqrt(-d);
    s.regime = DampingRegime::kUnderdamped;
    s.eigenvalues = {std::complex<double>(-gamma, 0.0), std::complex<double>(-gamma, root),
                     std::complex<double>(-gamma, -root)};
  }
  return s;
}

QuadraticForm build_G(double gamma, double lambda) {
  QuadraticForm G;
  G.spectrum = drift_matrix_eigen(gamma, lambda);
  const double l = G.spectrum.lambda;
  const double d = gamma * gamma - 4.0 * l;
  if (G.spectrum.regime == DampingRegime::kOverdamped) {
    const double root = std::sqrt(d);
    G.Q << -gamma, l, 1.0,  //
        -gamma + root, 0.5 * (gamma * gamma - 2.0 * l - gamma * root), 1.0,  //
        -gamma - root, 0.5 * (gamma * gamma - 2.0 * l + gamma * root), 1.0;
    G.Lambda = Eigen::Vector3d(-gamma, -gamma + root, -gamma - root).asDiagonal();
    G.gamma_bar = gamma - root;
    G.Q_bar = Eigen::RowVector3d(0.0, 1.0, 1.0) * G.Q;
    // |a1 dX - P|^2 + |a2 dX - P|^2 with a1,2 = (gamma -+ root) / 2.
    G.Sigma << 0.5 * (gamma - root), -1.0,  //
        0.5 * (gamma + root), -1.0;
  } else {
    const double w = std::sqrt(-d);
    G.Q << -gamma, l, 1.0,  //
        4.0 * l, -l * gamma, -gamma,  //
        0.0, l * w, -w;
    G.Lambda << -gamma, 0.0, 0.0,  //
        0.0, -gamma, -w,  //
        0.0, w, -gamma;
    G.gamma_bar = gamma;
    G.Q_bar = Eigen::RowVector3d(1.0, 0.0, 0.0) * G.Q;
    // |(gamma/2) dX - P|^2 + (lambda - gamma^2/4)|dX|^2.
    G.Sigma << 0.5 * gamma, -1.0,  //
        std::sqrt(l - 0.25 * gamma * gamma), 0.0;
  }
  G.Q_bar_norm = G.Q_bar.norm();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(G.Sigma.transpose() * G.Sigma);
  G.lambda_G = eig.eigenvalues()(0);
  G.C_G = eig.eigenvalues()(1);
  return G;
}

double QuadraticForm::operator()(const Eigen::VectorXd& dX, const Eigen::VectorXd& P) const {
  const Eigen::VectorXd first = Sigma(0, 0) * dX + Sigma(0, 1) * P;
  const Eigen::VectorXd second = Sigma(1, 0) * dX + Sigma(1, 1) * P;
  return first.squaredNorm() + second.squaredNorm();
}

double QuadraticForm::from_invariants(double z, double r2, double u2) const {
  return Q_bar(0) * z + Q_bar(1) * r2 + Q_bar(2) * u2;
}

// ---------------------------------------------------------------------------

HFamily::HFamily(double eta, double sigma, double theta, double M)
    : eta_(eta), sigma_(sigma), theta_(theta), M_(M) {
  if (!(eta > 0.0) || !(sigma > 0.0) || !(theta > 0.0) || !(M > 0.0)) {
    throw std::domain_error("HFamily: eta, sigma, theta and M must be > 0");
  }
  a_ = theta / (4.0 * eta * eta * sigma * sigma);
  S_ = 2.0 * M;

  // Grid: fine uniform panels where phi lives, coarse ones after, and a
  // geometric refinement towards 2M where the Phi/phi integrand peaks.
  const double phi_width = 1.0 / std::sqrt(a_);
  const double peak_width = std::min(S_, 1.0 / (2.0 * a_ * S_));
  const double uniform_end = std::min(S_, 40.0 * phi_width);
  constexpr int kPanels = 400;
  grid_.push_back(0.0);
  for (int k = 1; k <= kPanels; ++k) grid_.push_back(uniform_end * k / kPanels);
  if (uniform_end < S_) {
    for (int k = 1; k <= kPanels; ++k) {
      grid_.push_back(uniform_end + (S_ - uniform_end) * k / kPanels);
    }
  }
  for (int j = -6; j < 1100; ++j) {
    const double p = S_ - peak_width * std::ldexp(1.0, j);
    if (p <= 0.0) break;
    grid_.push_back(p);
  }
  std::sort(grid_.begin(), grid_.end());
  std::vector<double> unique{grid_.front()};
  for (double p : grid_) {
    if (p - unique.back() > 1e-14 * S_) unique.push_back(p);
  }
  unique.back() = S_;
  grid_ = std::move(unique);

  J_.assign(grid_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    J_[k + 1] = J_[k] + scaled_integral(grid_[k], grid_[k + 1]);
  }
  table_scaled_integral_ = J_.back();
  if (!(table_scaled_integral_ > 0.0) || !std::isfinite(table_scaled_integral_)) {
    throw std::domain_error("HFamily: quadrature of Phi/phi failed");
  }

  scaled_total_ = 0.0;
  const auto integrand = [this](double r) { return Phi(r) * std::exp(a_ * (r - S_) * (r + S_)); };
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    scaled_total_ += adaptive_simpson(integrand, grid_[k], grid_[k + 1], 1e-10, 40);
  }
  log_integral_ = a_ * S_ * S_ + std::log(scaled_total_);
  if (!std::isfinite(log_integral_)) throw std::domain_error("HFamily: non-finite integral");

  H_.assign(grid_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    H_[k + 1] = H_[k] + panel_h(k, grid_[k + 1]);
  }
  h_2M_ = H_.back();
}

double HFamily::phi(double s) const { return std::exp(-a_ * s * s); }

double HFamily::Phi(double r) const {
  const double root = std::sqrt(a_);
  return 0.5 * std::sqrt(std::numbers::pi) / root * std::erf(root * r);
}

double HFamily::scaled_integral(double s, double t) const {
  if (t <= s) return 0.0;
  return gauss_legendre([this](double r) { return Phi(r) * std::exp(a_ * (r - S_) * (r + S_)); },
                        s, t);
}

double HFamily::g(double s) const {
  if (s <= 0.0) return 1.0;
  if (s >= S_) return 0.5;
  const auto k = static_cast<std::size_t>(
      std::upper_bound(grid_.begin(), grid_.end(), s) - grid_.begin() - 1);
  const double J = J_[k] + scaled_integral(grid_[k], s);
  return 1.0 - 0.5 * J / table_scaled_integral_;
}

double HFamily::panel_h(std::size_t k, double upto) const {
  const double lo = grid_[k];
  if (upto <= lo || phi(lo) == 0.0) return 0.0;
  const double base = J_[k];
  return gauss_legendre(
      [&](double s) {
        const double J = base + scaled_integral(lo, s);
        return phi(s) * (1.0 - 0.5 * J / table_scaled_integral_);
      },
      lo, upto);
}

double HFamily::h(double l) const {
  if (l <= 0.0) return 0.0;
  if (l >= S_) return h_2M_;
  const auto k = static_cast<std::size_t>(
      std::upper_bound(grid_.begin(), grid_.end(), l) - grid_.begin() - 1);
  return H_[k] + panel_h(k, l);
}

double HFamily::h_prime(double l) const {
  if (l > S_) return 0.0;
  return phi(l) * g(std::max(l, 0.0));
}

double HFamily::h_second(double l) const {
  if (l >= S_) return 0.0;
  const double scaled = Phi(l) * std::exp(-a_ * S_ * S_ - std::log(table_scaled_integral_));
  return -2.0 * a_ * l * phi(l) * g(l) - scaled;
}

LogReal HFamily::kappa_bar() const {
  return LogReal::from_log(std::log(eta_ * eta_ * sigma_ * sigma_) - log_integral_);
}

// ---------------------------------------------------------------------------

LogReal find_C0(const C0Inputs& in) {
  const double log_beta_lg = in.beta.sign > 0 ? in.beta.log_abs + std::log(in.lambda_G)
                                              : -std::numeric_limits<double>::infinity();
  const double two_m = 2.0 * in.M;
  const double log_h2m = std::log(in.h->h_at_2M());

  const auto near_value = [&](double c, double s, double log_rho) {
    const double rho = std::exp(log_rho);
    const double l = rho * (c + in.eta * s);
    const double log_low = std::log(0.5 * in.h->Phi(std::min(l, two_m)));
    return log_rho + std::log(c + s) - log1p_exp(log_beta_lg + 2.0 * log_rho) - log_low;
  };
  const auto golden = [](auto&& f, double lo, double hi) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::fabs(lo)); ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = f(x1);
      }
    }
    return std::max(f1, f2);
  };

  // Best log-ratio along the ray at angle t (r = rho cos t, u = rho sin t).
  const auto along_ray = [&](double t) {
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double log_edge = std::log(two_m / (c + in.eta * s));
    // Beyond l = 2M the profile is h(2M) and the ratio peaks at
    // rho = 1/sqrt(beta lambda_G) or at the edge of the region.
    const double log_far = std::max(log_edge, -0.5 * log_beta_lg);
    double best = log_far + std::log(c + s) - log1p_exp(log_beta_lg + 2.0 * log_far) - log_h2m;
    // Inside, Phi/2 lower envelope: grid in log rho, then golden refinement.
    constexpr int kGrid = 160;
    const double span = 40.0;
    int arg = kGrid;
    double inner = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kGrid; ++k) {
      const double v = near_value(c, s, log_edge - span * (kGrid - k) / kGrid);
      if (v > inner) {
        inner = v;
        arg = k;
      }
    }
    const double lo = log_edge - span * (kGrid - std::max(arg - 1, 0)) / kGrid;
    const double hi = log_edge - span * (kGrid - std::min(arg + 1, kGrid)) / kGrid;
    inner = std::max(inner, golden([&](double x) { return near_value(c, s, x); }, lo, hi));
    return std::max(best, inner);
  };

  constexpr int kAngles = 720;
  const double quarter = 0.5 * std::numbers::pi;
  int arg = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kAngles; ++k) {
    const double v = along_ray(quarter * k / kAngles);
    if (v > best) {
      best = v;
      arg = k;
    }
  }
  const double lo = quarter * std::max(arg - 1, 0) / kAngles;
  const double hi = quarter * std::min(arg + 1, kAngles) / kAngles;
  best = std::max(best, golden(along_ray, lo, hi));
  if (!std::isfinite(best)) throw std::domain_error("find_C0: maximization did not converge");
  return LogReal::from_log(best + std::log1p(1e-6));
}

// ---------------------------------------------------------------------------

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::domain_error("rate constants: " + what);
}

}  // namespace

RateConstants assemble_constants(const RateInputs& in) {
  require(in.gamma > 0.0, "gamma must be > 0");
  require(in.lambda > 0.0, "lambda must be > 0");
  require(in.sigma > 0.0, "sigma must be > 0 (the coupling degenerates at sigma = 0)");
  require(in.lipschitz_x >= 0.0, "L^x must be >= 0");
  require(in.iota >= 0.0, "iota must be >= 0");
  require(in.M > 0.0, "M must be > 0");
  require(in.safety > 0.0 && in.safety < 1.0, "safety factor must lie in (0, 1)");

  RateConstants k;
  k.inputs = in;
  k.G = build_G(in.gamma, in.lambda);
  const double qn = k.G.Q_bar_norm;
  const double s = in.safety;
  const double lam = k.G.spectrum.lambda;

  k.eps0 = s * k.G.gamma_bar * k.G.lambda_G / (7.0 * qn);
  require(k.eps0 > 0.0, "eps0 bound gamma_bar lambda_G / (7 |Q_bar|) must be > 0");

  const double drift_load = in.lipschitz_x + lam + 4.0 * qn * in.sigma * in.sigma;
  const double eta_bound = std::min(std::min(in.gamma, k.eps0) / drift_load,
                                    in.M * std::sqrt(k.eps0) / in.sigma);
  k.eta = std::min(s * eta_bound, 1.0);
  require(k.eta > 0.0, "eta bound must be > 0");
  k.theta = 1.0 / k.eta + 8.0 * qn * in.sigma * in.sigma;

  k.h = std::make_shared<HFamily>(k.eta, in.sigma, k.theta, in.M);
  k.phi_min = k.h->phi_min();
  k.kappa_bar_M = k.h->kappa_bar();
  k.h_2M = k.h->h_at_2M();

  const double slack = in.gamma - k.eta * drift_load;
  require(slack > 0.0, "eta (L^x + lambda + 4 |Q_bar| sigma^2) < gamma");
  const LogReal far_bound = k.phi_min * LogReal::from(0.5 * slack);
  k.kappa_M = LogReal::from(s) * min(k.kappa_bar_M, far_bound);

  k.C1 = 4.0 * qn * in.lipschitz_x * in.M * in.M * (1.0 + 2.0 / k.eta) +
         4.0 * qn * in.sigma * in.sigma;
  k.beta = LogReal::from(s) * min(k.kappa_M / LogReal::from(k.C1), LogReal::from(1.0));
  k.C_M = 4.0 * in.M * in.M * k.G.C_G * (1.0 + 1.0 / (k.eta * k.eta));

  k.C0 = find_C0({k.G.lambda_G, k.beta, k.eta, in.M, k.h.get()});
  k.C2 = LogReal::from(2.0 * qn * in.M * (1.0 + 2.0 / k.eta)) * k.C0;

  const LogReal margin = k.kappa_M - LogReal::from(k.C1) * k.beta;
  require(margin.positive(), "kappa_M - C1 beta must be > 0");
  const LogReal iota_load =
      (LogReal::from(1.0) + k.beta * LogReal::from(k.C_M)) * LogReal::from(k.eta) +
      k.beta * LogReal::from(k.h_2M) * k.C2;
  k.iota_star = margin / iota_load;
  const double far_rate = k.G.gamma_bar - 7.0 * qn * k.eps0 / k.G.lambda_G;
  require(far_rate > 0.0, "gamma_bar - 7 |Q_bar| eps0 / lambda_G must be > 0");
  k.c = k.rate_at(in.iota);
  return k;
}

LogReal RateConstants::rate_at(LogReal iota) const {
  const double qn = G.Q_bar_norm;
  const LogReal margin = kappa_M - LogReal::from(C1) * beta;
  const LogReal iota_load =
      (LogReal::from(1.0) + beta * LogReal::from(C_M)) * LogReal::from(eta) +
      beta * LogReal::from(h_2M) * C2;
  const LogReal near = margin - iota_load * iota;
  const LogReal x = LogReal::from(2.0 * G.lambda_G * inputs.M * inputs.M) * beta;
  const double far_rate = G.gamma_bar - 7.0 * qn * eps0 / G.lambda_G;
  const LogReal far = LogReal::from(far_rate) * x / (LogReal::from(1.0) + x);
  return min(near, far);
}

double log_psi(const Eigen::VectorXd& dX, const Eigen::VectorXd& dV, const RateConstants& k) {
  const Eigen::VectorXd P = dV + k.inputs.gamma * dX;
  const double l = dX.norm() + k.eta * P.norm();
  const double h = k.h->h(l);
  if (h <= 0.0) return -std::numeric_limits<double>::infinity();
  const double G = k.G(dX, P);
  const double boost = (G > 0.0 && k.beta.sign > 0) ? log1p_exp(k.beta.log_abs + std::log(G)) : 0.0;
  return std::log(h) + boost;
}

double psi_distance(const Eigen::VectorXd& dX, const Eigen::VectorXd& dV, const RateConstants& k) {
  return std::exp(log_psi(dX, dV, k));
}

}  // namespace mfl
