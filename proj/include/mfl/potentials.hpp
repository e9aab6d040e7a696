#pragma once

#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

#include "mfl/ensemble.hpp"

namespace mfl {

/// f(x) = (lambda/2)|x|^2 with no mean-field part.
struct QuadraticConfinement {
  double lambda = 1.0;
};

/// F(m) = (lambda/2) E|X|^2 - (alpha/2) |E X|^2.
///
/// The mean-field part -(alpha/2)|E X|^2 is unbounded for alpha != 0, so this
/// is a test potential rather than one with bounded derivatives. Its
/// intrinsic derivative is D_mF(m, x) = lambda x - alpha E^m[X]. The particle
/// mean follows a linear ODE that loses confinement once alpha > lambda.
struct MeanAttraction {
  double lambda = 1.0;
  double alpha = 0.0;
};

/// Frozen sample sets for the GAN discriminator functional.
struct GanSamples {
  std::vector<double> target;
  std::vector<double> generated;
};

/// Discriminator potential with positions x = (c, a, b):
///   F(m) = mean_target Phi(m, y) - mean_generated Phi(m, y) + (ridge/2) E|X|^2,
///   Phi(m, y) = E^m[c clip(a y + b)].
/// Samples are held fixed, so the generator's response enters only through
/// them (its own dependence on m drops out of the derivative at the optimum).
struct GanDiscriminator {
  std::shared_ptr<const GanSamples> samples;
  double clip = 10.0;
  double ridge = 0.1;
};

using Potential = std::variant<QuadraticConfinement, MeanAttraction, GanDiscriminator>;

/// Throws std::invalid_argument when lambda <= 0, clip <= 0 or samples missing.
void validate(const Potential& p);

/// Confinement coefficient lambda of variants (a)/(b); throws for the GAN.
double confinement(const Potential& p);

inline double clipped(double z, double clip) { return z < -clip ? -clip : (z > clip ? clip : z); }

/// Subgradient 0 at |z| == clip.
inline double clipped_slope(double z, double clip) { return (z > -clip && z < clip) ? 1.0 : 0.0; }

/// D_mF(m_hat, x) where m_hat is the empirical position law of e.
Vector intrinsic_derivative(const Potential& p, const ParticleEnsemble& e, const Vector& x);

/// D_mF(m_hat, x_i) for every row of positions, one reduction for the law.
Matrix drift_field(const Potential& p, const Matrix& positions);

/// F(m_hat^X).
double potential_value(const Potential& p, const Matrix& positions);
inline double potential_value(const Potential& p, const ParticleEnsemble& e) {
  return potential_value(p, e.positions());
}

/// Compares D_mF(m_hat, x_i) with N times the central difference of F when
/// particle i moves, using d/dx_i F(m_hat) = D_mF(m_hat, x_i) / N.
/// Returns max_j |analytic_j - fd_j| / max(|analytic|_inf, 1e-8).
double fd_consistency_check(const Potential& p, const ParticleEnsemble& e, std::size_t i,
                            double h = 1e-5);

}  // namespace mfl
