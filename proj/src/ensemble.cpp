#include "mfl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mfl/rng.hpp"

namespace mfl {

ParticleEnsemble::ParticleEnsemble(Matrix positions, Matrix velocities)
    : positions_(std::move(positions)), velocities_(std::move(velocities)) {
  if (positions_.rows() < 1 || positions_.cols() < 1) {
    throw std::invalid_argument("ensemble needs at least one particle and one dimension");
  }
  if (positions_.rows() != velocities_.rows() || positions_.cols() != velocities_.cols()) {
    throw std::invalid_argument("positions and velocities must have identical shape");
  }
}

ParticleEnsemble ParticleEnsemble::zeros(std::size_t count, std::size_t dim) {
  const auto rows = static_cast<Eigen::Index>(count);
  const auto cols = static_cast<Eigen::Index>(dim);
  return ParticleEnsemble(Matrix::Zero(rows, cols), Matrix::Zero(rows, cols));
}

bool ParticleEnsemble::all_finite() const {
  return positions_.allFinite() && velocities_.allFinite();
}

void ParticleEnsemble::require_finite(const std::string& context) const {
  if (!all_finite()) {
    throw std::runtime_error("non-finite particle state: " + context);
  }
}

bool ParticleEnsemble::operator==(const ParticleEnsemble& other) const {
  return positions_.rows() == other.positions_.rows() &&
         positions_.cols() == other.positions_.cols() &&
         positions_ == other.positions_ && velocities_ == other.velocities_;
}

namespace {

double coordinate(const std::vector<double>& v, std::size_t j) {
  return v.empty() ? 0.0 : v[j];
}

void check_length(const std::vector<double>& v, std::size_t dim, const char* what) {
  if (!v.empty() && v.size() != dim) {
    throw std::invalid_argument(std::string(what) + " has length " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(dim));
  }
}

}  // namespace

void InitSpec::validate(std::size_t dim) const {
  if (const auto* p = std::get_if<PointMass>(&law)) {
    check_length(p->position, dim, "point mass position");
    check_length(p->velocity, dim, "point mass velocity");
  } else if (const auto* g = std::get_if<IsotropicGaussian>(&law)) {
    check_length(g->position_mean, dim, "gaussian position mean");
    check_length(g->velocity_mean, dim, "gaussian velocity mean");
    if (!(g->position_variance >= 0.0) || !(g->velocity_variance >= 0.0)) {
      throw std::invalid_argument("gaussian variance must be non-negative");
    }
  } else if (const auto* b = std::get_if<UniformBox>(&law)) {
    if (!(b->position_low <= b->position_high) || !(b->velocity_low <= b->velocity_high)) {
      throw std::invalid_argument("uniform box bounds must be ordered");
    }
  }
}

ParticleEnsemble init_ensemble(const InitSpec& spec, std::size_t count, std::size_t dim) {
  if (count < 1 || dim < 1) {
    throw std::invalid_argument("init_ensemble requires N >= 1 and n >= 1");
  }
  spec.validate(dim);
  auto e = ParticleEnsemble::zeros(count, dim);
  Matrix& x = e.positions();
  Matrix& v = e.velocities();
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_stream(spec.seed, Purpose::kInit, i);
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      std::visit(
          [&](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, PointMass>) {
              x(r, c) = coordinate(law.position, j);
              v(r, c) = coordinate(law.velocity, j);
            } else if constexpr (std::is_same_v<T, IsotropicGaussian>) {
              x(r, c) = coordinate(law.position_mean, j) +
                        std::sqrt(law.position_variance) * rng.normal();
              v(r, c) = coordinate(law.velocity_mean, j) +
                        std::sqrt(law.velocity_variance) * rng.normal();
            } else {
              x(r, c) = law.position_low + (law.position_high - law.position_low) * rng.uniform();
              v(r, c) = law.velocity_low + (law.velocity_high - law.velocity_low) * rng.uniform();
            }
          },
          spec.law);
    }
  }
  return e;
}

Moments empirical_moments(const ParticleEnsemble& e) {
  const double n = static_cast<double>(e.count());
  Moments m;
  m.mean_x = e.positions().colwise().mean().transpose();
  m.mean_v = e.velocities().colwise().mean().transpose();
  const Eigen::MatrixXd dx = e.positions().rowwise() - m.mean_x.transpose();
  const Eigen::MatrixXd dv = e.velocities().rowwise() - m.mean_v.transpose();
  m.cov_x = (dx.transpose() * dx) / n;
  m.cov_v = (dv.transpose() * dv) / n;
  m.kinetic = 0.5 * e.velocities().squaredNorm() / n;
  return m;
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wasserstein1_1d: empty sample");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) total += std::fabs(sa[i] - sb[i]);
    return total / static_cast<double>(sa.size());
  }
  const std::size_t grid = std::max(sa.size(), sb.size());
  const auto quantile = [](const std::vector<double>& s, double u) {
    auto k = static_cast<std::size_t>(u * static_cast<double>(s.size()));
    return s[std::min(k, s.size() - 1)];
  };
  double total = 0.0;
  for (std::size_t k = 0; k < grid; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(grid);
    total += std::fabs(quantile(sa, u) - quantile(sb, u));
  }
  return total / static_cast<double>(grid);
}

std::vector<double> column(const Matrix& m, std::size_t j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = m(i, static_cast<Eigen::Index>(j));
  }
  return out;
}

void write_ensemble_csv(std::ostream& out, const ParticleEnsemble& e) {
  const std::size_t n = e.dim();
  for (std::size_t j = 0; j < n; ++j) out << (j ? "," : "") << "x_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",v_" << j;
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < e.positions().rows(); ++i) {
    for (Eigen::Index j = 0; j < e.positions().cols(); ++j) {
      out << (j ? "," : "") << e.positions()(i, j);
    }
    for (Eigen::Index j = 0; j < e.velocities().cols(); ++j) {
      out << ',' << e.velocities()(i, j);
    }
    out << '\n';
  }
}

ParticleEnsemble read_ensemble_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ensemble csv: missing header");
  const auto fields = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (fields % 2 != 0) throw std::runtime_error("ensemble csv: odd column count");
  const std::size_t dim = fields / 2;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != fields) throw std::runtime_error("ensemble csv: ragged row");
    ++rows;
  }
  auto e = ParticleEnsemble::zeros(rows, dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      e.positions()(r, c) = values[i * fields + j];
      e.velocities()(r, c) = values[i * fields + dim + j];
    }
  }
  return e;
}

}  // namespace mfl
