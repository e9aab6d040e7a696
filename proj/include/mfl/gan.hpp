#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mfl/ensemble.hpp"
#include "mfl/potentials.hpp"

namespace mfl {

struct MixtureComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
};

enum class GeneratorMode {
  kMetropolis,  // random-walk Metropolis chains, warm-started between steps
  kQuadrature,  // deterministic quantiles of the response density on a grid
};

struct MhConfig {
  std::size_t chains = 500;  // one generated sample per chain
  double initial_scale = 1.0;
  double target_acceptance = 0.234;
  std::size_t burn_in = 200;  // adaptive sweeps on the first response
  std::size_t adapt_sweeps = 5;  // adaptive sweeps on later, warm-started responses
  std::size_t sweeps = 10;  // frozen-scale sweeps before the chain states are taken

  void validate() const;
};

struct GanConfig {
  std::size_t target_count = 500;
  std::vector<MixtureComponent> mixture = {{0.5, -1.0, 1.0}, {0.5, 4.0, 1.0}};
  double clip = 10.0;
  double sigma0 = 0.1;
  double sigma1 = 1.0;
  double gamma = 1.0;
  double lambda0 = 0.01;
  double lambda1 = 0.1;
  double speed = 1.0;  // eta_s: dX = eta_s V dt, kinetic energy (eta_s/2) E|V|^2
  std::size_t particles = 500;
  double c_max = 20.0;
  double init_stddev = 1.0;  // discriminator positions start N(0, init_stddev^2 I)
  MhConfig mh;
  GeneratorMode generator = GeneratorMode::kMetropolis;
  std::size_t quadrature_points = 20001;
  double dt = 0.01;  // the generator's response makes the drift stiff
  std::size_t max_steps = 3000;
  std::size_t record_every = 1;
  double stop_fraction = 0.05;  // stop once potential < fraction * initial ...
  std::size_t stop_window = 50;  // ... for this many consecutive records
  double guard = 1e6;  // abort once any |x| exceeds this
  std::uint64_t seed = 0;

  void validate() const;
};

/// Phi(m, y) = mean_i c_i clip(a_i y + b_i) held as an exact piecewise-linear
/// function of y, so each evaluation costs one binary search.
class DiscriminatorProfile {
 public:
  DiscriminatorProfile(const Matrix& positions, double clip);

  double operator()(double y) const;

 private:
  double base_ = 0.0;  // sum of the left-hand constants
  std::vector<double> kinks_;
  std::vector<double> slope_prefix_;  // running sum of slope jumps
  std::vector<double> offset_prefix_;  // running sum of jump * kink
  double scale_ = 1.0;  // 1 / N
};

/// mean_i c_i clip(a_i y + b_i), computed directly.
double discriminator_value(const Matrix& positions, double y, double clip);

/// -(2/sigma0^2) (Phi(m, y) + lambda0 y^2 / 2); unnormalized.
double generator_logdensity(double phi, double y, double sigma0, double lambda0);

struct MhReport {
  double acceptance = 0.0;  // over the frozen-scale sweeps
  double scale = 0.0;
};

/// Random-walk Metropolis on every chain state in place. The proposal scale
/// is adapted on the log scale toward target_acceptance for `adaptive`
/// sweeps, then frozen for config.sweeps sweeps. Throws std::runtime_error
/// if an adaptive window accepts nothing.
MhReport mh_sample(const std::function<double(double)>& logdensity, std::vector<double>& chains,
                   double& scale, std::size_t adaptive, const MhConfig& config,
                   std::uint64_t seed, std::uint64_t round);

/// Quantiles (k + 1/2)/count of the density exp(logdensity) on [lo, hi],
/// from the trapezoid CDF on `points` nodes.
std::vector<double> quadrature_quantiles(const std::function<double(double)>& logdensity,
                                         double lo, double hi, std::size_t points,
                                         std::size_t count);

/// log of the integral of exp(logdensity) over [lo, hi], trapezoid rule.
double log_partition(const std::function<double(double)>& logdensity, double lo, double hi,
                     std::size_t points);

/// D_mF at x = (c, a, b) for frozen samples:
/// mean_target D Phi - mean_generated D Phi + lambda1 x, where
/// D Phi(y, x) = (phi(a y + b), c phi'(a y + b) y, c phi'(a y + b)).
Eigen::Vector3d dmF_gan(std::span<const double> generated, std::span<const double> target,
                        const Eigen::Vector3d& x, double clip, double lambda1);

std::vector<double> sample_mixture(std::span<const MixtureComponent> mixture, std::size_t count,
                                   std::uint64_t seed);

struct EnergyRow {
  std::size_t step = 0;
  double potential = 0.0;  // mean_target Phi - mean_generated Phi
  double potential_se = 0.0;  // Monte Carlo standard error of that difference
  double kinetic = 0.0;  // (eta_s / 2) mean |V|^2
  double acceptance = 0.0;
  /// Functional the discriminator descends, plus kinetic energy:
  /// mean_target Phi + (sigma0^2/2) ln Z[m] + (lambda1/2) E|X|^2 + kinetic,
  /// with Z the normalizer of the generator response. Non-increasing for the
  /// noiseless damped flow; the potential energy alone need not be.
  double lyapunov = 0.0;
};

struct GanResult {
  std::vector<EnergyRow> rows;
  std::vector<double> target;
  std::vector<double> generated;  // response to the final discriminator
  std::optional<ParticleEnsemble> discriminator;
  std::size_t steps = 0;
  bool stopped_early = false;
};

/// Alternates generator response and one BBK step of the discriminator
/// (drift -D_mF - gamma V, noise sigma1), projecting c onto [-C_max, C_max].
/// The energy of step s is recorded with the samples used for that step.
/// `target_override`, when given, replaces the mixture draw.
GanResult train(const GanConfig& config, const std::vector<double>* target_override = nullptr);

/// Fraction of consecutive record pairs whose potential rises by more than
/// multiplier * hypot(se_k, se_{k+1}), counted from `skip` onwards.
double uphill_fraction(std::span<const EnergyRow> rows, double multiplier = 3.0,
                       std::size_t skip = 0);

/// `step,potential,kinetic,lyapunov`
void write_energy_csv(std::ostream& out, std::span<const EnergyRow> rows);
void write_samples_csv(std::ostream& out, std::span<const double> ys);

}  // namespace mfl
