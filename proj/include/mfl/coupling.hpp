#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfl/ensemble.hpp"
#include "mfl/integrator.hpp"
#include "mfl/log_real.hpp"
#include "mfl/potentials.hpp"
#include "mfl/rates.hpp"

namespace mfl {

enum class CouplingMode {
  kReflection,  // reflection-synchronous mixture weighted by rc, sc
  kSynchronous,  // rc == 0 everywhere
  kIndependent,  // unrelated noise; reference for quadratic-variation checks
};

struct CouplingParams {
  double eta = 1.0;
  double M = 1.0;
  double xi = 1e-3;
  CouplingMode mode = CouplingMode::kReflection;

  void validate() const;
};

/// rc = clamp(u/xi, 0, 1) * clamp((2M + xi - (r + eta u))/xi, 0, 1).
double rc_weight(double r, double u, double eta, double M, double xi);

/// Two systems of identical shape; particle i of `a` is paired with particle i of `b`.
struct CoupledPair {
  ParticleEnsemble a;
  ParticleEnsemble b;
};

struct PairGeometry {
  double r = 0.0;  // |dX|
  double u = 0.0;  // |P|, P = dV + gamma dX
  double z = 0.0;  // dX . P
};

PairGeometry pair_geometry(const CoupledPair& pair, std::size_t i, double gamma);

/// One Euler-Maruyama step of both systems. System a receives
/// dW = rc dW^rc + sc dW^sc, system b receives
/// dW' = rc (I - 2 e e^T) dW^rc + sc dW^sc with e = P/|P| (0 at P = 0).
/// Each system's drift is evaluated against its own empirical law.
/// `noise_out`, when given, receives the (N x n) increments dW - dW'.
void coupled_step(CoupledPair& pair, const Potential& p, const DynamicsParams& params,
                  const CouplingParams& coupling, std::uint64_t seed, std::uint64_t step,
                  Matrix* noise_out = nullptr);

struct ContractionConfig {
  RateInputs rates;  // gamma, lambda, sigma, iota (= alpha), M, L^x
  std::size_t pairs = 2000;
  std::size_t dim = 1;
  double dt = 1e-3;
  double horizon = 10.0;
  std::size_t record_every = 100;
  double xi = 0.0;  // <= 0 selects 1e-3 M
  CouplingMode mode = CouplingMode::kReflection;
  // Initial draws use mix64(seed + init.seed); equal init seeds and a zero
  // offset give identical systems.
  InitSpec init_a{IsotropicGaussian{{}, 1.0, {}, 1.0}, 1};
  InitSpec init_b{IsotropicGaussian{{}, 1.0, {}, 1.0}, 2};
  double offset_b = 2.0;  // added to every position coordinate of system b
  double burn_in = 0.0;
  std::uint64_t seed = 0;
};

struct ContractionRow {
  double time = 0.0;
  LogReal mean_psi;
  double mean_h = 0.0;  // A = mean h(r + eta u)
  double mean_Gh = 0.0;  // B = mean G h; mean psi = A + beta B
  double mean_G = 0.0;
  double mean_r = 0.0;
  double mean_u = 0.0;
  double rc_fraction = 0.0;  // share of pairs with rc > 0
};

struct ContractionResult {
  RateConstants constants;
  double xi = 0.0;
  std::vector<ContractionRow> rows;
  /// -d/dt log mean psi by least squares after burn-in. beta is far below
  /// double resolution, so log(A + beta B) is expanded as
  /// log A + beta B/A (exact to O(beta^2)) and both slopes are kept.
  LogReal fitted_rate;
  bool fitted = false;  // false when fewer than 3 recordings have psi > 0
  double slope_log_h = 0.0;
  double slope_G_ratio = 0.0;  // d/dt (B/A)
  double G_decay_rate = 0.0;  // -d/dt log mean G
  std::size_t cauchy_schwarz_violations = 0;
};

/// Least-squares slope of y against t; throws std::invalid_argument with
/// fewer than 3 points.
double least_squares_slope(std::span<const double> t, std::span<const double> y);

ContractionResult contraction_experiment(const ContractionConfig& config);

struct ContractionFit {
  bool fitted = false;
  LogReal rate;
  double slope_log_h = 0.0;
  double slope_G_ratio = 0.0;
  double G_decay_rate = 0.0;
};
/// The fit used by contraction_experiment, for rows from any source.
ContractionFit fit_contraction(std::span<const ContractionRow> rows, LogReal beta,
                               double burn_in = 0.0);
/// Pair averages over runs with equal pair counts and recording times, i.e.
/// the rows of one run holding every pair. mean_psi is left unset.
std::vector<ContractionRow> pool_rows(std::span<const std::vector<ContractionRow>> runs);

/// CSV `t,mean_psi,mean_r,mean_u,rc_fraction`; mean_psi is printed as a
/// double and may underflow to 0.
void write_contraction_csv(std::ostream& out, std::span<const ContractionRow> rows);

}  // namespace mfl
