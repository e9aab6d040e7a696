#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace mfl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// N particles in R^n x R^n. Row i holds particle i. Positions alone realize
/// the position marginal m^X; the (position, velocity) pair realizes m.
class ParticleEnsemble {
 public:
  ParticleEnsemble(Matrix positions, Matrix velocities);

  static ParticleEnsemble zeros(std::size_t count, std::size_t dim);

  std::size_t count() const { return static_cast<std::size_t>(positions_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(positions_.cols()); }

  const Matrix& positions() const { return positions_; }
  const Matrix& velocities() const { return velocities_; }
  Matrix& positions() { return positions_; }
  Matrix& velocities() { return velocities_; }

  /// Throws std::runtime_error when any entry is NaN or infinite.
  void require_finite(const std::string& context) const;
  bool all_finite() const;

  bool operator==(const ParticleEnsemble& other) const;

 private:
  Matrix positions_;
  Matrix velocities_;
};

struct PointMass {
  std::vector<double> position;  // empty means the origin
  std::vector<double> velocity;
};

/// Isotropic Gaussian: mean vector, one scalar variance per block.
struct IsotropicGaussian {
  std::vector<double> position_mean;
  double position_variance = 1.0;
  std::vector<double> velocity_mean;
  double velocity_variance = 0.0;
};

struct UniformBox {
  double position_low = 0.0;
  double position_high = 1.0;
  double velocity_low = 0.0;
  double velocity_high = 0.0;
};

struct InitSpec {
  std::variant<PointMass, IsotropicGaussian, UniformBox> law;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for negative variance or unordered bounds.
  void validate(std::size_t dim) const;
};

ParticleEnsemble init_ensemble(const InitSpec& spec, std::size_t count, std::size_t dim);

struct Moments {
  Vector mean_x;
  Vector mean_v;
  Eigen::MatrixXd cov_x;
  Eigen::MatrixXd cov_v;
  double kinetic = 0.0;  // (1/2) mean |V|^2
};

/// Population (1/N) covariances.
Moments empirical_moments(const ParticleEnsemble& e);

/// Exact W1 between two one-dimensional empirical laws. Inputs need not be
/// sorted. Unequal sizes are compared through quantile functions on a common
/// grid of max(|a|, |b|) midpoints.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

/// Column j of a matrix as a std::vector.
std::vector<double> column(const Matrix& m, std::size_t j);

/// CSV header `x_0..x_{n-1},v_0..v_{n-1}` then one row per particle, written
/// with max_digits10 precision so values round-trip.
void write_ensemble_csv(std::ostream& out, const ParticleEnsemble& e);
ParticleEnsemble read_ensemble_csv(std::istream& in);

}  // namespace mfl
