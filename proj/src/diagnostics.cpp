#include "mfl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "kdtree.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

// digamma at a positive integer.
double digamma_int(std::size_t n) {
  double s = -0.57721566490153286061;
  for (std::size_t j = 1; j < n; ++j) s += 1.0 / static_cast<double>(j);
  return s;
}

double log_unit_ball_volume(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d);
  return half * std::log(std::numbers::pi) - std::lgamma(half + 1.0);
}

}  // namespace

KnnEntropy entropy_knn_terms(const Matrix& samples, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto d = static_cast<std::size_t>(samples.cols());
  if (k < 1 || n <= k) throw std::invalid_argument("entropy_knn: need N > k >= 1");
  if (d < 1) throw std::invalid_argument("entropy_knn: need d >= 1");

  Matrix jittered = samples;
  for (Eigen::Index j = 0; j < jittered.cols(); ++j) {
    const double scale = std::max(jittered.col(j).cwiseAbs().maxCoeff(), 1.0) * 1e-12;
    Rng rng = make_stream(seed, Purpose::kJitter, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < jittered.rows(); ++i) {
      jittered(i, j) += scale * (2.0 * rng.uniform() - 1.0);
    }
  }

  detail::KdTree tree(jittered.data(), n, d);
  const double offset =
      digamma_int(n) - digamma_int(k) + log_unit_ball_volume(d);
  KnnEntropy out;
  out.contributions.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = tree.kth_neighbor_distance(i, k);
    // Differential entropy term is offset + d ln eps; H is its negative.
    const double term = -(offset + static_cast<double>(d) * std::log(eps));
    out.contributions[i] = term;
    total += term;
  }
  out.value = total / static_cast<double>(n);
  return out;
}

double max_abs_cross_correlation(const ParticleEnsemble& e) {
  const Moments m = empirical_moments(e);
  const double n = static_cast<double>(e.count());
  const Eigen::MatrixXd dx = e.positions().rowwise() - m.mean_x.transpose();
  const Eigen::MatrixXd dv = e.velocities().rowwise() - m.mean_v.transpose();
  const Eigen::MatrixXd cross = dx.transpose() * dv / n;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < cross.rows(); ++j) {
    for (Eigen::Index l = 0; l < cross.cols(); ++l) {
      const double denom = std::sqrt(m.cov_x(j, j) * m.cov_v(l, l));
      if (denom > 0.0) worst = std::max(worst, std::fabs(cross(j, l)) / denom);
    }
  }
  return worst;
}

DiagnosticsRow free_energy(const ParticleEnsemble& e, const Potential& p, double gamma,
                           double sigma, const FreeEnergyOptions& options) {
  if (!(gamma > 0.0)) throw std::invalid_argument("free_energy: gamma must be > 0");
  const Moments m = empirical_moments(e);
  const auto n = static_cast<Eigen::Index>(e.count());
  const auto dim = static_cast<Eigen::Index>(e.dim());

  DiagnosticsRow row;
  row.potential = potential_value(p, e);
  row.kinetic = m.kinetic;
  row.entropy_weight = sigma * sigma / (2.0 * gamma);
  row.mean_x_norm = m.mean_x.norm();
  row.var_x = m.cov_x.trace() / static_cast<double>(dim);
  row.var_v = m.cov_v.trace() / static_cast<double>(dim);
  row.xv_corr = max_abs_cross_correlation(e);

  Matrix joint(n, 2 * dim);
  joint.leftCols(dim) = e.positions();
  joint.rightCols(dim) = e.velocities();
  const KnnEntropy h = entropy_knn_terms(joint, options.k, options.seed);
  row.entropy = h.value;
  row.free_energy = row.potential + row.kinetic;
  if (row.entropy_weight != 0.0) row.free_energy += row.entropy_weight * row.entropy;

  // Half-sampling: F re-estimated on random halves of the cloud, k-NN search
  // included. Drawing N/2 of N without replacement gives a conditional
  // variance matching that of the full-size estimate, and unlike resampling
  // fixed per-particle terms it sees the dependence between neighbours.
  const auto half = n / 2;
  if (options.bootstrap > 1 && half > static_cast<Eigen::Index>(options.k)) {
    Rng rng = make_stream(options.seed, Purpose::kBootstrap);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<double> totals(options.bootstrap);
    Matrix positions(half, dim);
    Matrix sub(half, 2 * dim);
    for (std::size_t b = 0; b < totals.size(); ++b) {
      for (Eigen::Index i = 0; i < half; ++i) {
        const auto j = i + static_cast<Eigen::Index>(
                               rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        sub.row(i) = joint.row(order[static_cast<std::size_t>(i)]);
      }
      positions = sub.leftCols(dim);
      double total = potential_value(p, positions) +
                     0.5 * sub.rightCols(dim).squaredNorm() / static_cast<double>(half);
      if (row.entropy_weight != 0.0) {
        total += row.entropy_weight * entropy_knn(sub, options.k, options.seed + b + 1);
      }
      totals[b] = total;
    }
    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= static_cast<double>(totals.size());
    double var = 0.0;
    for (double t : totals) var += (t - mean) * (t - mean);
    row.free_energy_se = std::sqrt(var / static_cast<double>(totals.size() - 1));
  }
  return row;
}

MonotonicityReport lyapunov_monotonicity(std::span<const DiagnosticsRow> rows, double burn_in,
                                         double multiplier) {
  std::vector<const DiagnosticsRow*> kept;
  for (const auto& r : rows) {
    if (r.time >= burn_in) kept.push_back(&r);
  }
  MonotonicityReport report;
  std::vector<double> decrements;
  for (std::size_t i = 1; i < kept.size(); ++i) {
    const DiagnosticsRow& a = *kept[i - 1];
    const DiagnosticsRow& b = *kept[i];
    const double rise = b.free_energy - a.free_energy;
    const double noise = std::hypot(a.free_energy_se, b.free_energy_se);
    ++report.checked_pairs;
    if (rise > multiplier * noise) ++report.violations;
    report.max_uphill = std::max(report.max_uphill, rise);
    if (noise > 0.0) report.max_uphill_in_se = std::max(report.max_uphill_in_se, rise / noise);
    const double dt = b.time - a.time;
    if (dt > 0.0) decrements.push_back(-rise / dt);
  }
  if (decrements.size() >= 4) {
    const std::size_t q = decrements.size() / 4;
    double first = 0.0;
    double last = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      first += decrements[i];
      last += decrements[decrements.size() - 1 - i];
    }
    report.dissipation_trend = (last - first) / static_cast<double>(q);
  }
  return report;
}

StationarityReport stationarity_check(const ParticleEnsemble& e, const Potential& p,
                                      double gamma, double sigma) {
  const Moments m = empirical_moments(e);
  const auto n = m.cov_v.rows();
  const double velocity_var = sigma * sigma / (2.0 * gamma);
  StationarityReport report;
  report.velocity_cov_residual =
      (m.cov_v - velocity_var * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  report.xv_corr = max_abs_cross_correlation(e);
  if (const auto* q = std::get_if<QuadraticConfinement>(&p)) {
    const double position_var = velocity_var / q->lambda;
    report.position_cov_residual =
        (m.cov_x - position_var * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  }
  return report;
}

void write_trajectory_csv(std::ostream& out, std::span<const DiagnosticsRow> rows) {
  out << "t,potential,kinetic,entropy,free_energy,mean_x_norm,var_x,var_v,xv_corr,w1_ref\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.time << ',' << r.potential << ',' << r.kinetic << ',' << r.entropy << ','
        << r.free_energy << ',' << r.mean_x_norm << ',' << r.var_x << ',' << r.var_v << ','
        << r.xv_corr << ',';
    if (r.w1_ref) out << *r.w1_ref;
    out << '\n';
  }
}

}  // namespace mfl
