#include "mfl/gan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mfl/integrator.hpp"
#include "mfl/rng.hpp"

namespace mfl {

void MhConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("mh.chains must be >= 1");
  if (!(initial_scale > 0.0)) throw std::invalid_argument("mh.initial_scale must be > 0");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw std::invalid_argument("mh.target_acceptance must lie in (0, 1)");
  }
  if (burn_in < 1) throw std::invalid_argument("mh.burn_in must be >= 1");
  if (sweeps < 1) throw std::invalid_argument("mh.sweeps must be >= 1");
}

void GanConfig::validate() const {
  if (target_count < 1) throw std::invalid_argument("target_count must be >= 1");
  if (mixture.empty()) throw std::invalid_argument("mixture needs at least one component");
  for (const MixtureComponent& m : mixture) {
    if (!(m.weight > 0.0) || !(m.stddev >= 0.0) || !std::isfinite(m.mean)) {
      throw std::invalid_argument("mixture components need weight > 0 and stddev >= 0");
    }
  }
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be > 0");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("sigma0 must be > 0");
  if (!(sigma1 >= 0.0)) throw std::invalid_argument("sigma1 must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(lambda0 >= 0.0) || !(lambda1 >= 0.0)) {
    throw std::invalid_argument("lambda0 and lambda1 must be >= 0");
  }
  if (generator == GeneratorMode::kQuadrature && !(lambda0 > 0.0)) {
    throw std::invalid_argument("the quadrature generator needs lambda0 > 0");
  }
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be > 0");
  if (particles < 1) throw std::invalid_argument("particles must be >= 1");
  if (!(c_max > 0.0)) throw std::invalid_argument("c_max must be > 0");
  if (!(init_stddev >= 0.0)) throw std::invalid_argument("init_stddev must be >= 0");
  if (!(dt > 0.0) || !(gamma * dt < 2.0)) throw std::invalid_argument("need dt > 0, gamma dt < 2");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (quadrature_points < 3) throw std::invalid_argument("quadrature_points must be >= 3");
  if (!(guard > 0.0)) throw std::invalid_argument("guard must be > 0");
  mh.validate();
}

// ---------------------------------------------------------------------------

DiscriminatorProfile::DiscriminatorProfile(const Matrix& positions, double clip) {
  if (positions.cols() != 3 || positions.rows() == 0) {
    throw std::invalid_argument("discriminator needs a nonempty (N x 3) ensemble");
  }
  std::vector<std::pair<double, double>> jumps;  // (kink, slope jump)
  jumps.reserve(2 * static_cast<std::size_t>(positions.rows()));
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    const double c = positions(i, 0);
    const double a = positions(i, 1);
    const double b = positions(i, 2);
    if (c == 0.0) continue;
    if (a == 0.0) {
      base_ += c * clipped(b, clip);
      continue;
    }
    const double k1 = (-clip - b) / a;
    const double k2 = (clip - b) / a;
    base_ += a > 0.0 ? -clip * c : clip * c;
    jumps.emplace_back(std::min(k1, k2), c * a);
    jumps.emplace_back(std::max(k1, k2), -c * a);
  }
  std::sort(jumps.begin(), jumps.end());
  kinks_.reserve(jumps.size());
  slope_prefix_.assign(jumps.size() + 1, 0.0);
  offset_prefix_.assign(jumps.size() + 1, 0.0);
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    kinks_.push_back(jumps[k].first);
    slope_prefix_[k + 1] = slope_prefix_[k] + jumps[k].second;
    // jump * kink = c (+-clip - b): bounded however small a is.
    offset_prefix_[k + 1] = offset_prefix_[k] + jumps[k].second * jumps[k].first;
  }
  scale_ = 1.0 / static_cast<double>(positions.rows());
}

double DiscriminatorProfile::operator()(double y) const {
  const auto m = static_cast<std::size_t>(std::upper_bound(kinks_.begin(), kinks_.end(), y) -
                                          kinks_.begin());
  return (base_ + y * slope_prefix_[m] - offset_prefix_[m]) * scale_;
}

double discriminator_value(const Matrix& positions, double y, double clip) {
  if (positions.rows() == 0) throw std::invalid_argument("discriminator_value: empty ensemble");
  double total = 0.0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    total += positions(i, 0) * clipped(positions(i, 1) * y + positions(i, 2), clip);
  }
  return total / static_cast<double>(positions.rows());
}

double generator_logdensity(double phi, double y, double sigma0, double lambda0) {
  return -2.0 / (sigma0 * sigma0) * (phi + 0.5 * lambda0 * y * y);
}

// ---------------------------------------------------------------------------

MhReport mh_sample(const std::function<double(double)>& logdensity, std::vector<double>& chains,
                   double& scale, std::size_t adaptive, const MhConfig& config,
                   std::uint64_t seed, std::uint64_t round) {
  config.validate();
  std::vector<double> current(chains.size());
  for (std::size_t j = 0; j < chains.size(); ++j) current[j] = logdensity(chains[j]);

  const std::size_t total = adaptive + config.sweeps;
  std::size_t accepted_frozen = 0;
  std::size_t window_accepted = 0;
  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    std::size_t accepted = 0;
    for (std::size_t j = 0; j < chains.size(); ++j) {
      Rng rng = make_stream(seed, Purpose::kMetropolis, j, round * 1'000'003ull + sweep);
      const double proposal = chains[j] + scale * rng.normal();
      const double value = logdensity(proposal);
      if (std::log(rng.uniform_open()) < value - current[j]) {
        chains[j] = proposal;
        current[j] = value;
        ++accepted;
      }
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(chains.size());
    if (sweep < adaptive) {
      window_accepted += accepted;
      // Robbins-Monro on log scale with a slowly decaying gain.
      const double gain = 1.0 / std::sqrt(1.0 + static_cast<double>(sweep));
      scale *= std::exp(gain * (rate - config.target_acceptance));
      if (sweep + 1 == adaptive && window_accepted == 0) {
        throw std::runtime_error("Metropolis adaptation accepted no proposal in " +
                                 std::to_string(adaptive) + " sweeps (scale " +
                                 std::to_string(scale) + ")");
      }
    } else {
      accepted_frozen += accepted;
    }
  }
  MhReport report;
  report.scale = scale;
  report.acceptance = static_cast<double>(accepted_frozen) /
                      static_cast<double>(config.sweeps * chains.size());
  return report;
}

std::vector<double> quadrature_quantiles(const std::function<double(double)>& logdensity,
                                         double lo, double hi, std::size_t points,
                                         std::size_t count) {
  if (!(hi > lo) || points < 3 || count < 1) {
    throw std::invalid_argument("quadrature_quantiles: need lo < hi, points >= 3, count >= 1");
  }
  std::vector<double> y(points), logd(points);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points; ++k) {
    y[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    logd[k] = logdensity(y[k]);
    peak = std::max(peak, logd[k]);
  }
  if (!std::isfinite(peak)) throw std::runtime_error("quadrature_quantiles: non-finite density");
  std::vector<double> cdf(points, 0.0);
  for (std::size_t k = 1; k < points; ++k) {
    cdf[k] = cdf[k - 1] +
             0.5 * (std::exp(logd[k - 1] - peak) + std::exp(logd[k] - peak)) * (y[k] - y[k - 1]);
  }
  std::vector<double> out(count);
  for (std::size_t q = 0; q < count; ++q) {
    const double level = (static_cast<double>(q) + 0.5) / static_cast<double>(count) * cdf.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), level);
    const std::size_t k = std::clamp<std::size_t>(it - cdf.begin(), 1, points - 1);
    const double span = cdf[k] - cdf[k - 1];
    const double w = span > 0.0 ? (level - cdf[k - 1]) / span : 0.5;
    out[q] = y[k - 1] + w * (y[k] - y[k - 1]);
  }
  return out;
}

double log_partition(const std::function<double(double)>& logdensity, double lo, double hi,
                     std::size_t points) {
  if (!(hi > lo) || points < 3) throw std::invalid_argument("log_partition: need lo < hi, points >= 3");
  std::vector<double> logd(points);
  double peak = -std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    logd[k] = logdensity(lo + step * static_cast<double>(k));
    peak = std::max(peak, logd[k]);
  }
  if (!std::isfinite(peak)) throw std::runtime_error("log_partition: non-finite density");
  double sum = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double w = (k == 0 || k + 1 == points) ? 0.5 : 1.0;
    sum += w * std::exp(logd[k] - peak);
  }
  return peak + std::log(sum * step);
}

Eigen::Vector3d dmF_gan(std::span<const double> generated, std::span<const double> target,
                        const Eigen::Vector3d& x, double clip, double lambda1) {
  if (generated.empty() || target.empty()) {
    throw std::invalid_argument("dmF_gan: sample sets must be nonempty");
  }
  const auto mean_feature = [&](std::span<const double> ys) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (double y : ys) {
      const double z = x[1] * y + x[2];
      const double slope = clipped_slope(z, clip);
      acc += Eigen::Vector3d(clipped(z, clip), x[0] * slope * y, x[0] * slope);
    }
    return Eigen::Vector3d(acc / static_cast<double>(ys.size()));
  };
  // The discriminator maximizes Phi-gap - (lambda1/2) E|X|^2; descending the
  // negated objective turns the ridge into the confinement +lambda1 x.
  return mean_feature(target) - mean_feature(generated) + lambda1 * x;
}

std::vector<double> sample_mixture(std::span<const MixtureComponent> mixture, std::size_t count,
                                   std::uint64_t seed) {
  if (mixture.empty()) throw std::invalid_argument("sample_mixture: empty mixture");
  double total = 0.0;
  for (const MixtureComponent& m : mixture) total += m.weight;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = make_stream(seed, Purpose::kTargetSamples, k);
    const double u = rng.uniform() * total;
    std::size_t pick = 0;
    double cumulative = mixture[0].weight;
    while (u >= cumulative && pick + 1 < mixture.size()) cumulative += mixture[++pick].weight;
    out[k] = mixture[pick].mean + mixture[pick].stddev * rng.normal();
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

MeanVar mean_var(const DiscriminatorProfile& phi, std::span<const double> ys) {
  long double s = 0, s2 = 0;
  for (double y : ys) {
    const double v = phi(y);
    s += v;
    s2 += static_cast<long double>(v) * v;
  }
  const long double n = ys.size();
  const long double m = s / n;
  return {static_cast<double>(m), static_cast<double>(std::max<long double>(s2 / n - m * m, 0))};
}

// Beyond this radius the ridge outweighs any swing of Phi by e^-40.
double response_radius(const Matrix& positions, const GanConfig& config) {
  double sup = 0.0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i) sup += std::fabs(positions(i, 0));
  sup *= config.clip / static_cast<double>(positions.rows());
  return std::sqrt((4.0 * sup + 40.0 * config.sigma0 * config.sigma0) / config.lambda0);
}

class Generator {
 public:
  Generator(const GanConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
    chains_.resize(config.mh.chains);
    const double sd = config.lambda0 > 0.0 ? config.sigma0 / std::sqrt(2.0 * config.lambda0) : 1.0;
    for (std::size_t j = 0; j < chains_.size(); ++j) {
      chains_[j] = sd * make_stream(seed, Purpose::kInit, j).normal();
    }
    scale_ = config.mh.initial_scale;
  }

  std::vector<double> respond(const Matrix& positions, const DiscriminatorProfile& phi,
                              double& acceptance) {
    const auto logd = [&](double y) {
      return generator_logdensity(phi(y), y, config_.sigma0, config_.lambda0);
    };
    if (config_.generator == GeneratorMode::kQuadrature) {
      const double radius = response_radius(positions, config_);
      acceptance = 1.0;
      return quadrature_quantiles(logd, -radius, radius, config_.quadrature_points,
                                  config_.mh.chains);
    }
    const std::size_t adaptive = round_ == 0 ? config_.mh.burn_in : config_.mh.adapt_sweeps;
    const MhReport report = mh_sample(logd, chains_, scale_, adaptive, config_.mh, seed_, round_);
    ++round_;
    acceptance = report.acceptance;
    return chains_;
  }

 private:
  const GanConfig& config_;
  std::uint64_t seed_;
  std::vector<double> chains_;
  double scale_ = 1.0;
  std::uint64_t round_ = 0;
};

}  // namespace

GanResult train(const GanConfig& config, const std::vector<double>* target_override) {
  config.validate();
  GanResult result;
  result.target = target_override ? *target_override
                                  : sample_mixture(config.mixture, config.target_count,
                                                   mix64(config.seed ^ 0x7A26E7ull));
  if (result.target.empty()) throw std::invalid_argument("target sample set is empty");

  Matrix x(static_cast<Eigen::Index>(config.particles), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Rng rng = make_stream(mix64(config.seed ^ 0xD15C0ull), Purpose::kInit,
                          static_cast<std::uint64_t>(i));
    for (int j = 0; j < 3; ++j) x(i, j) = config.init_stddev * rng.normal();
    x(i, 0) = std::clamp(x(i, 0), -config.c_max, config.c_max);
  }
  ParticleEnsemble e(x, Matrix::Zero(x.rows(), 3));

  auto samples = std::make_shared<GanSamples>();
  samples->target = result.target;
  const Potential potential = GanDiscriminator{samples, config.clip, config.lambda1};
  DynamicsParams params;
  params.gamma = config.gamma;
  params.sigma = config.sigma1;
  params.speed = config.speed;
  params.dt = config.dt;
  const std::uint64_t dynamics_seed = mix64(config.seed ^ 0xB8Bull);
  Generator generator(config, mix64(config.seed ^ 0x6E4ull));

  double initial = 0.0;
  std::size_t quiet = 0;
  for (std::size_t s = 0;; ++s) {
    const DiscriminatorProfile phi(e.positions(), config.clip);
    double acceptance = 0.0;
    std::vector<double> generated = generator.respond(e.positions(), phi, acceptance);

    if (s % config.record_every == 0 || s == config.max_steps) {
      const MeanVar t = mean_var(phi, result.target);
      const MeanVar g = mean_var(phi, generated);
      EnergyRow row;
      row.step = s;
      row.potential = t.mean - g.mean;
      row.potential_se = std::sqrt(t.var / static_cast<double>(result.target.size()) +
                                   g.var / static_cast<double>(generated.size()));
      row.kinetic = 0.5 * config.speed * e.velocities().squaredNorm() /
                    static_cast<double>(e.count());
      row.acceptance = acceptance;
      const double radius = response_radius(e.positions(), config);
      const double log_z = log_partition(
          [&](double y) { return generator_logdensity(phi(y), y, config.sigma0, config.lambda0); },
          -radius, radius, config.quadrature_points);
      row.lyapunov = t.mean + 0.5 * config.sigma0 * config.sigma0 * log_z +
                     0.5 * config.lambda1 * e.positions().squaredNorm() /
                         static_cast<double>(e.count()) +
                     row.kinetic;
      if (!std::isfinite(row.potential) || !std::isfinite(row.kinetic)) {
        throw std::runtime_error("GAN training diverged at step " + std::to_string(s));
      }
      if (result.rows.empty()) initial = std::fabs(row.potential);
      quiet = std::fabs(row.potential) < config.stop_fraction * initial ? quiet + 1 : 0;
      result.rows.push_back(row);
    }

    const bool stop = config.stop_window > 0 && quiet >= config.stop_window;
    if (stop || s == config.max_steps) {
      result.generated = std::move(generated);
      result.steps = s;
      result.stopped_early = stop;
      break;
    }

    samples->generated = std::move(generated);
    e = bbk_step(e, potential, params, dynamics_seed, s);
    auto c = e.positions().col(0);
    c = c.cwiseMax(-config.c_max).cwiseMin(config.c_max);
    if (e.positions().cwiseAbs().maxCoeff() > config.guard) {
      throw std::runtime_error("GAN discriminator left the guard region at step " +
                               std::to_string(s + 1));
    }
  }
  result.discriminator = std::move(e);
  return result;
}

double uphill_fraction(std::span<const EnergyRow> rows, double multiplier, std::size_t skip) {
  std::size_t pairs = 0, uphill = 0;
  for (std::size_t k = skip; k + 1 < rows.size(); ++k) {
    ++pairs;
    const double noise = multiplier * std::hypot(rows[k].potential_se, rows[k + 1].potential_se);
    if (rows[k + 1].potential - rows[k].potential > noise) ++uphill;
  }
  return pairs == 0 ? 0.0 : static_cast<double>(uphill) / static_cast<double>(pairs);
}

void write_energy_csv(std::ostream& out, std::span<const EnergyRow> rows) {
  const auto old = out.precision(17);
  out << "step,potential,kinetic,lyapunov\n";
  for (const EnergyRow& row : rows) {
    out << row.step << ',' << row.potential << ',' << row.kinetic << ',' << row.lyapunov << '\n';
  }
  out.precision(old);
}

void write_samples_csv(std::ostream& out, std::span<const double> ys) {
  const auto old = out.precision(17);
  out << "y\n";
  for (double y : ys) out << y << '\n';
  out.precision(old);
}

}  // namespace mfl
