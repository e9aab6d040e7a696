#include "mfl/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mfl/rng.hpp"

namespace mfl {

void CouplingParams::validate() const {
  if (!(eta > 0.0) || !(M > 0.0) || !(xi > 0.0)) {
    throw std::invalid_argument("coupling: eta, M and xi must be > 0");
  }
}

double rc_weight(double r, double u, double eta, double M, double xi) {
  const double near = std::clamp(u / xi, 0.0, 1.0);
  const double inside = std::clamp((2.0 * M + xi - (r + eta * u)) / xi, 0.0, 1.0);
  return near * inside;
}

PairGeometry pair_geometry(const CoupledPair& pair, std::size_t i, double gamma) {
  const auto row = static_cast<Eigen::Index>(i);
  PairGeometry g;
  double r2 = 0.0, u2 = 0.0;
  for (Eigen::Index j = 0; j < pair.a.positions().cols(); ++j) {
    const double dx = pair.a.positions()(row, j) - pair.b.positions()(row, j);
    const double p = pair.a.velocities()(row, j) - pair.b.velocities()(row, j) + gamma * dx;
    r2 += dx * dx;
    u2 += p * p;
    g.z += dx * p;
  }
  g.r = std::sqrt(r2);
  g.u = std::sqrt(u2);
  return g;
}

void coupled_step(CoupledPair& pair, const Potential& p, const DynamicsParams& params,
                  const CouplingParams& coupling, std::uint64_t seed, std::uint64_t step,
                  Matrix* noise_out) {
  if (pair.a.count() != pair.b.count() || pair.a.dim() != pair.b.dim()) {
    throw std::invalid_argument("coupled_step: systems differ in shape");
  }
  const Matrix drift_a = drift_field(p, pair.a.positions());
  const Matrix drift_b = drift_field(p, pair.b.positions());
  const Eigen::Index n = pair.a.positions().cols();
  const double dt = params.dt;
  const double root_dt = std::sqrt(dt);
  if (noise_out) noise_out->resize(pair.a.positions().rows(), n);

  Vector e(n), w_rc(n), w_sc(n);
  for (Eigen::Index i = 0; i < pair.a.positions().rows(); ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    Rng rng_rc = make_stream(seed, Purpose::kCouplingReflect, idx, step);
    Rng rng_sc = make_stream(seed, Purpose::kCouplingSync, idx, step);
    for (Eigen::Index j = 0; j < n; ++j) {
      w_rc(j) = rng_rc.normal();
      w_sc(j) = rng_sc.normal();
    }

    double rc = 0.0;
    double sc = 1.0;
    double reflect = 0.0;  // e . w_rc
    if (coupling.mode == CouplingMode::kReflection) {
      const PairGeometry g = pair_geometry(pair, static_cast<std::size_t>(i), params.gamma);
      rc = rc_weight(g.r, g.u, coupling.eta, coupling.M, coupling.xi);
      sc = std::sqrt(std::max(0.0, 1.0 - rc * rc));
      if (g.u > 0.0) {
        for (Eigen::Index j = 0; j < n; ++j) {
          e(j) = (pair.a.velocities()(i, j) - pair.b.velocities()(i, j)) / g.u +
                 params.gamma * (pair.a.positions()(i, j) - pair.b.positions()(i, j)) / g.u;
        }
        reflect = e.dot(w_rc);
      } else {
        e.setZero();
      }
    } else {
      e.setZero();
    }

    for (Eigen::Index j = 0; j < n; ++j) {
      double dw_a, dw_b;
      if (coupling.mode == CouplingMode::kIndependent) {
        dw_a = root_dt * w_rc(j);
        dw_b = root_dt * w_sc(j);
      } else {
        dw_a = root_dt * (rc * w_rc(j) + sc * w_sc(j));
        dw_b = root_dt * (rc * (w_rc(j) - 2.0 * e(j) * reflect) + sc * w_sc(j));
      }
      if (noise_out) (*noise_out)(i, j) = dw_a - dw_b;

      double& xa = pair.a.positions()(i, j);
      double& va = pair.a.velocities()(i, j);
      double& xb = pair.b.positions()(i, j);
      double& vb = pair.b.velocities()(i, j);
      const double va0 = va, vb0 = vb;
      va += (-drift_a(i, j) - params.gamma * va0) * dt + params.sigma * dw_a;
      vb += (-drift_b(i, j) - params.gamma * vb0) * dt + params.sigma * dw_b;
      xa += params.speed * va0 * dt;
      xb += params.speed * vb0 * dt;
    }
  }
  if (!pair.a.all_finite() || !pair.b.all_finite()) {
    throw std::runtime_error("non-finite coupled state after step " + std::to_string(step));
  }
}

double least_squares_slope(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("least_squares_slope: size mismatch");
  if (t.size() < 3) throw std::invalid_argument("degenerate fit: fewer than 3 points");
  long double mt = 0, my = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    mt += t[k];
    my += y[k];
  }
  mt /= t.size();
  my /= t.size();
  long double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    sxy += (t[k] - mt) * (y[k] - my);
    sxx += (t[k] - mt) * (t[k] - mt);
  }
  if (sxx == 0) throw std::invalid_argument("degenerate fit: all times equal");
  return static_cast<double>(sxy / sxx);
}

namespace {

ContractionRow measure(const CoupledPair& pair, const RateConstants& k,
                       const CouplingParams& coupling, std::size_t& cs_violations) {
  ContractionRow row;
  const std::size_t count = pair.a.count();
  const double gamma = k.inputs.gamma;
  long double sum_h = 0, sum_gh = 0, sum_g = 0, sum_r = 0, sum_u = 0;
  std::size_t reflecting = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const PairGeometry g = pair_geometry(pair, i, gamma);
    if (std::fabs(g.z) > g.r * g.u * (1.0 + 1e-12)) ++cs_violations;
    const double h = k.h->h(g.r + k.eta * g.u);
    const double G = k.G.from_invariants(g.z, g.r * g.r, g.u * g.u);
    sum_h += h;
    sum_gh += static_cast<long double>(G) * h;
    sum_g += G;
    sum_r += g.r;
    sum_u += g.u;
    if (rc_weight(g.r, g.u, coupling.eta, coupling.M, coupling.xi) > 0.0) ++reflecting;
  }
  const double inv = 1.0 / static_cast<double>(count);
  row.mean_h = static_cast<double>(sum_h) * inv;
  row.mean_Gh = static_cast<double>(sum_gh) * inv;
  row.mean_G = static_cast<double>(sum_g) * inv;
  row.mean_r = static_cast<double>(sum_r) * inv;
  row.mean_u = static_cast<double>(sum_u) * inv;
  row.rc_fraction = static_cast<double>(reflecting) * inv;
  row.mean_psi = LogReal::from(row.mean_h) + k.beta * LogReal::from(row.mean_Gh);
  return row;
}

}  // namespace

ContractionFit fit_contraction(std::span<const ContractionRow> rows, LogReal beta,
                               double burn_in) {
  std::vector<double> t, log_h, ratio, log_g;
  for (const ContractionRow& row : rows) {
    if (row.time < burn_in) continue;
    if (!(row.mean_h > 0.0)) break;  // every pair coalesced; psi is 0 from here on
    t.push_back(row.time);
    log_h.push_back(std::log(row.mean_h));
    ratio.push_back(row.mean_Gh / row.mean_h);
    log_g.push_back(std::log(row.mean_G));
  }
  ContractionFit fit;
  if (t.size() < 3) return fit;
  fit.fitted = true;
  fit.slope_log_h = least_squares_slope(t, log_h);
  fit.slope_G_ratio = least_squares_slope(t, ratio);
  fit.G_decay_rate = -least_squares_slope(t, log_g);
  fit.rate = LogReal::from(-fit.slope_log_h) + beta * LogReal::from(-fit.slope_G_ratio);
  return fit;
}

std::vector<ContractionRow> pool_rows(std::span<const std::vector<ContractionRow>> runs) {
  if (runs.empty()) return {};
  std::vector<ContractionRow> pooled(runs.front().size());
  for (const auto& run : runs) {
    if (run.size() != pooled.size()) throw std::invalid_argument("pool_rows: record counts differ");
  }
  const double w = 1.0 / static_cast<double>(runs.size());
  for (std::size_t k = 0; k < pooled.size(); ++k) {
    ContractionRow& p = pooled[k];
    p.time = runs.front()[k].time;
    long double h = 0, gh = 0, g = 0, r = 0, u = 0, rc = 0;
    for (const auto& run : runs) {
      h += run[k].mean_h;
      gh += run[k].mean_Gh;
      g += run[k].mean_G;
      r += run[k].mean_r;
      u += run[k].mean_u;
      rc += run[k].rc_fraction;
    }
    p.mean_h = static_cast<double>(h) * w;
    p.mean_Gh = static_cast<double>(gh) * w;
    p.mean_G = static_cast<double>(g) * w;
    p.mean_r = static_cast<double>(r) * w;
    p.mean_u = static_cast<double>(u) * w;
    p.rc_fraction = static_cast<double>(rc) * w;
  }
  return pooled;
}

ContractionResult contraction_experiment(const ContractionConfig& config) {
  if (config.pairs < 1) throw std::invalid_argument("contraction: pairs must be >= 1");
  if (config.record_every < 1) throw std::invalid_argument("contraction: record_every must be >= 1");
  if (!(config.horizon > 0.0)) throw std::invalid_argument("contraction: horizon must be > 0");

  ContractionResult out;
  out.constants = assemble_constants(config.rates);
  const RateConstants& k = out.constants;
  out.xi = config.xi > 0.0 ? config.xi : 1e-3 * config.rates.M;

  const RateInputs& in = config.rates;
  const Potential potential = in.iota > 0.0
                                  ? Potential{MeanAttraction{in.lambda, in.iota}}
                                  : Potential{QuadraticConfinement{in.lambda}};
  DynamicsParams params;
  params.gamma = in.gamma;
  params.sigma = in.sigma;
  params.dt = config.dt;
  params.steps = static_cast<std::size_t>(std::llround(config.horizon / config.dt));
  params.validate();
  CouplingParams coupling{k.eta, in.M, out.xi, config.mode};
  coupling.validate();

  InitSpec init_a = config.init_a;
  InitSpec init_b = config.init_b;
  init_a.seed = mix64(config.seed + config.init_a.seed);
  init_b.seed = mix64(config.seed + config.init_b.seed);
  CoupledPair pair{init_ensemble(init_a, config.pairs, config.dim),
                   init_ensemble(init_b, config.pairs, config.dim)};
  pair.b.positions().array() += config.offset_b;
  const std::uint64_t noise_seed = mix64(config.seed + 0x9E3779B97F4A7C15ull);

  const auto record = [&](std::size_t s) {
    ContractionRow row = measure(pair, k, coupling, out.cauchy_schwarz_violations);
    row.time = static_cast<double>(s) * config.dt;
    out.rows.push_back(row);
  };
  record(0);
  for (std::size_t s = 1; s <= params.steps; ++s) {
    coupled_step(pair, potential, params, coupling, noise_seed, s);
    if (s % config.record_every == 0 || s == params.steps) record(s);
  }

  const ContractionFit fit = fit_contraction(out.rows, k.beta, config.burn_in);
  out.fitted = fit.fitted;
  out.fitted_rate = fit.rate;
  out.slope_log_h = fit.slope_log_h;
  out.slope_G_ratio = fit.slope_G_ratio;
  out.G_decay_rate = fit.G_decay_rate;
  return out;
}

void write_contraction_csv(std::ostream& out, std::span<const ContractionRow> rows) {
  const auto old = out.precision(17);
  out << "t,mean_psi,mean_r,mean_u,rc_fraction\n";
  for (const ContractionRow& row : rows) {
    out << row.time << ',' << row.mean_psi.value() << ',' << row.mean_r << ',' << row.mean_u
        << ',' << row.rc_fraction << '\n';
  }
  out.precision(old);
}

}  // namespace mfl
