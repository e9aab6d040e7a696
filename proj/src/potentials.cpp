#include "mfl/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_gan_shape(const Matrix& positions) {
  if (positions.cols() != 3) {
    throw std::invalid_argument("GAN discriminator particles live in R^3 (c, a, b)");
  }
}

// Mean over samples y of (phi(a y + b), c phi'(a y + b) y, c phi'(a y + b)).
Eigen::Vector3d feature_gradient_mean(const std::vector<double>& ys, double c, double a,
                                      double b, double clip) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (double y : ys) {
    const double z = a * y + b;
    const double slope = clipped_slope(z, clip);
    acc[0] += clipped(z, clip);
    acc[1] += c * slope * y;
    acc[2] += c * slope;
  }
  return acc / static_cast<double>(ys.size());
}

// Sorted samples with prefix sums: the mean of D Phi over all samples is
// then three interval sums per particle instead of a pass over the samples.
struct SortedSamples {
  std::vector<double> y;
  std::vector<double> prefix;  // prefix[k] = y[0] + ... + y[k-1]

  explicit SortedSamples(std::vector<double> ys) : y(std::move(ys)), prefix(y.size() + 1, 0.0) {
    std::sort(y.begin(), y.end());
    for (std::size_t k = 0; k < y.size(); ++k) prefix[k + 1] = prefix[k] + y[k];
  }

  // Same quantity as feature_gradient_mean, up to rounding at the clip edges.
  Eigen::Vector3d gradient_mean(double c, double a, double b, double clip) const {
    const double count = static_cast<double>(y.size());
    std::size_t first = 0, last = 0;  // interior samples are [first, last)
    double low_value = 0.0, high_value = 0.0;  // clipped value left / right of it
    if (a == 0.0) {
      if (std::fabs(b) < clip) {
        last = y.size();
      } else {
        first = last = y.size();
        low_value = high_value = clipped(b, clip);
      }
    } else {
      const double k1 = (-clip - b) / a;
      const double k2 = (clip - b) / a;
      const double lo = std::min(k1, k2);
      const double hi = std::max(k1, k2);
      first = static_cast<std::size_t>(std::upper_bound(y.begin(), y.end(), lo) - y.begin());
      last = std::max(first, static_cast<std::size_t>(
                                 std::lower_bound(y.begin(), y.end(), hi) - y.begin()));
      low_value = a > 0.0 ? -clip : clip;
      high_value = -low_value;
    }
    const double inside = static_cast<double>(last - first);
    const double sum_y = prefix[last] - prefix[first];
    Eigen::Vector3d acc;
    acc[0] = a * sum_y + b * inside + low_value * static_cast<double>(first) +
             high_value * static_cast<double>(y.size() - last);
    acc[1] = c * sum_y;
    acc[2] = c * inside;
    return acc / count;
  }
};

double discriminator_mean(const Matrix& positions, const std::vector<double>& ys, double clip) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    const double c = positions(i, 0);
    const double a = positions(i, 1);
    const double b = positions(i, 2);
    double inner = 0.0;
    for (double y : ys) inner += clipped(a * y + b, clip);
    total += c * inner;
  }
  return total / (static_cast<double>(positions.rows()) * static_cast<double>(ys.size()));
}

}  // namespace

void validate(const Potential& p) {
  std::visit(Overloaded{
                 [](const QuadraticConfinement& q) {
                   if (!(q.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
                 },
                 [](const MeanAttraction& m) {
                   if (!(m.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
                   if (!std::isfinite(m.alpha)) throw std::invalid_argument("alpha must be finite");
                 },
                 [](const GanDiscriminator& g) {
                   if (!g.samples || g.samples->target.empty() || g.samples->generated.empty()) {
                     throw std::invalid_argument("GAN potential needs target and generated samples");
                   }
                   if (!(g.clip > 0.0)) throw std::invalid_argument("clip level must be > 0");
                   if (!(g.ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
                 },
             },
             p);
}

double confinement(const Potential& p) {
  if (const auto* q = std::get_if<QuadraticConfinement>(&p)) return q->lambda;
  if (const auto* m = std::get_if<MeanAttraction>(&p)) return m->lambda;
  throw std::invalid_argument("GAN potential has no quadratic confinement split");
}

Matrix drift_field(const Potential& p, const Matrix& positions) {
  return std::visit(
      Overloaded{
          [&](const QuadraticConfinement& q) -> Matrix { return q.lambda * positions; },
          [&](const MeanAttraction& m) -> Matrix {
            const Eigen::RowVectorXd mean = positions.colwise().mean();
            Matrix out = m.lambda * positions;
            out.rowwise() -= m.alpha * mean;
            return out;
          },
          [&](const GanDiscriminator& g) -> Matrix {
            require_gan_shape(positions);
            Matrix out(positions.rows(), 3);
            if (positions.rows() < 8) {  // too few particles to repay the sort
              for (Eigen::Index i = 0; i < positions.rows(); ++i) {
                const double c = positions(i, 0);
                const double a = positions(i, 1);
                const double b = positions(i, 2);
                const Eigen::Vector3d grad =
                    feature_gradient_mean(g.samples->target, c, a, b, g.clip) -
                    feature_gradient_mean(g.samples->generated, c, a, b, g.clip);
                out.row(i) = grad.transpose() + g.ridge * positions.row(i);
              }
              return out;
            }
            const SortedSamples target(g.samples->target);
            const SortedSamples generated(g.samples->generated);
            for (Eigen::Index i = 0; i < positions.rows(); ++i) {
              const double c = positions(i, 0);
              const double a = positions(i, 1);
              const double b = positions(i, 2);
              const Eigen::Vector3d grad = target.gradient_mean(c, a, b, g.clip) -
                                           generated.gradient_mean(c, a, b, g.clip);
              out.row(i) = grad.transpose() + g.ridge * positions.row(i);
            }
            return out;
          },
      },
      p);
}

Vector intrinsic_derivative(const Potential& p, const ParticleEnsemble& e, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != e.dim()) {
    throw std::invalid_argument("intrinsic_derivative: dimension mismatch");
  }
  return std::visit(
      Overloaded{
          [&](const QuadraticConfinement& q) -> Vector { return q.lambda * x; },
          [&](const MeanAttraction& m) -> Vector {
            const Vector mean = e.positions().colwise().mean().transpose();
            return m.lambda * x - m.alpha * mean;
          },
          [&](const GanDiscriminator&) -> Vector {
            Matrix single(1, x.size());
            single.row(0) = x.transpose();
            return drift_field(p, single).row(0).transpose();
          },
      },
      p);
}

double potential_value(const Potential& p, const Matrix& positions) {
  const double n = static_cast<double>(positions.rows());
  return std::visit(
      Overloaded{
          [&](const QuadraticConfinement& q) {
            return 0.5 * q.lambda * positions.squaredNorm() / n;
          },
          [&](const MeanAttraction& m) {
            const Eigen::RowVectorXd mean = positions.colwise().mean();
            return 0.5 * m.lambda * positions.squaredNorm() / n - 0.5 * m.alpha * mean.squaredNorm();
          },
          [&](const GanDiscriminator& g) {
            require_gan_shape(positions);
            return discriminator_mean(positions, g.samples->target, g.clip) -
                   discriminator_mean(positions, g.samples->generated, g.clip) +
                   0.5 * g.ridge * positions.squaredNorm() / n;
          },
      },
      p);
}

double fd_consistency_check(const Potential& p, const ParticleEnsemble& e, std::size_t i,
                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_consistency_check: step must be > 0");
  if (i >= e.count()) throw std::out_of_range("fd_consistency_check: particle index");
  const auto row = static_cast<Eigen::Index>(i);
  const Vector analytic =
      intrinsic_derivative(p, e, e.positions().row(row).transpose());
  const double n = static_cast<double>(e.count());
  Matrix shifted = e.positions();
  double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-8);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < shifted.cols(); ++j) {
    const double base = shifted(row, j);
    shifted(row, j) = base + h;
    const double up = potential_value(p, shifted);
    shifted(row, j) = base - h;
    const double down = potential_value(p, shifted);
    shifted(row, j) = base;
    const double fd = n * (up - down) / (2.0 * h);
    worst = std::max(worst, std::fabs(analytic[j] - fd) / scale);
  }
  return worst;
}

}  // namespace mfl
