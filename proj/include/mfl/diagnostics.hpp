#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mfl/ensemble.hpp"
#include "mfl/potentials.hpp"

namespace mfl {

/// One recorded point of a trajectory. free_energy is assembled from the
/// stored fields: potential + kinetic + entropy_weight * entropy.
struct DiagnosticsRow {
  double time = 0.0;
  double potential = 0.0;
  double kinetic = 0.0;
  double entropy = 0.0;  // H(m) = integral of rho ln rho
  double entropy_weight = 0.0;  // sigma^2 / (2 gamma)
  double free_energy = 0.0;
  double free_energy_se = 0.0;  // half-sampling standard error
  double mean_x_norm = 0.0;
  double var_x = 0.0;  // trace(Cov X) / n
  double var_v = 0.0;
  double xv_corr = 0.0;  // max |Corr(X_j, V_k)|
  std::optional<double> w1_ref;
};

struct KnnEntropy {
  double value = 0.0;
  /// Per-sample terms whose mean is value; used for resampling.
  std::vector<double> contributions;
};

/// Kozachenko-Leonenko estimate of the negative differential entropy
/// H = E[ln rho] from N samples in R^d (rows). Samples receive a uniform
/// jitter of relative size 1e-12 so duplicated points keep distinct
/// neighbours. Throws std::invalid_argument unless N > k >= 1.
KnnEntropy entropy_knn_terms(const Matrix& samples, std::size_t k, std::uint64_t seed = 0);
inline double entropy_knn(const Matrix& samples, std::size_t k, std::uint64_t seed = 0) {
  return entropy_knn_terms(samples, k, seed).value;
}

struct FreeEnergyOptions {
  std::size_t k = 4;
  std::size_t bootstrap = 50;  // half-sample resamples for the standard error
  std::uint64_t seed = 0;
};

/// Free energy F(m^X) + (1/2)E|V|^2 + sigma^2/(2 gamma) H(m), the entropy
/// estimated on the joint (X, V) cloud in 2n dimensions.
DiagnosticsRow free_energy(const ParticleEnsemble& e, const Potential& p, double gamma,
                           double sigma, const FreeEnergyOptions& options = {});

struct MonotonicityReport {
  std::size_t checked_pairs = 0;
  std::size_t violations = 0;
  double max_uphill = 0.0;  // largest increase, absolute units
  double max_uphill_in_se = 0.0;  // largest increase over its noise scale
  /// Mean of the last quartile of -dF/dt minus mean of the first quartile.
  double dissipation_trend = 0.0;
};

/// Counts consecutive recorded pairs (both at time >= burn_in) where the free
/// energy rises by more than multiplier * sqrt(se_a^2 + se_b^2).
MonotonicityReport lyapunov_monotonicity(std::span<const DiagnosticsRow> rows, double burn_in,
                                         double multiplier = 3.0);

struct StationarityReport {
  double velocity_cov_residual = 0.0;  // max |Cov(V) - sigma^2/(2 gamma) I|
  double xv_corr = 0.0;  // max |Corr(X_j, V_k)|
  std::optional<double> position_cov_residual;  // QuadraticConfinement only
};

/// Residuals against the product Gibbs law of a stationary ensemble.
StationarityReport stationarity_check(const ParticleEnsemble& e, const Potential& p,
                                      double gamma, double sigma);

double max_abs_cross_correlation(const ParticleEnsemble& e);

/// `t,potential,kinetic,entropy,free_energy,mean_x_norm,var_x,var_v,xv_corr,w1_ref`
void write_trajectory_csv(std::ostream& out, std::span<const DiagnosticsRow> rows);

}  // namespace mfl
