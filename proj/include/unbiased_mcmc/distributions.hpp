#pragma once

// Normalized densities paired with exact samplers. The maximal coupling needs
// both halves to describe the same law, so every type here exposes
// log_density() and sample() together.

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

// Meeting is exact coalescence; only bitwise-identical states count.
inline bool same_state(double a, double b) noexcept {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

inline bool same_state(const Point& a, const Point& b) noexcept {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

template <class T>
  requires requires(const T& a, const T& b) { { a == b } -> std::convertible_to<bool>; }
bool same_state(const T& a, const T& b) {
  return a == b;
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return kNegInf;
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    throw ParameterError("normal quantile requires u in [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

struct Normal {
  double mean = 0.0;
  double sd = 1.0;

  Normal() = default;
  Normal(double m, double s) : mean(m), sd(s) {
    if (!(s > 0.0)) throw ParameterError("Normal requires sd > 0");
  }

  double log_density(double x) const {
    // Same operation order as MultivariateNormal in one dimension, so the two
    // agree bitwise.
    const double z = (x - mean) / sd;
    return (-kLogSqrt2Pi - std::log(sd)) - 0.5 * (z * z);
  }
  double sample(RngStream& s) const { return mean + sd * s.normal(); }
  double cdf(double x) const { return std_normal_cdf((x - mean) / sd); }
  double quantile(double u) const { return mean + sd * std_normal_quantile(u); }
};

struct Gamma {
  double shape = 1.0;
  double rate = 1.0;

  Gamma() = default;
  Gamma(double a, double b) : shape(a), rate(b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("Gamma requires shape > 0 and rate > 0");
  }

  double log_density(double x) const {
    if (!(x > 0.0)) return kNegInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
  }
  double sample(RngStream& s) const { return s.gamma(shape, rate); }
  double mean() const { return shape / rate; }
};

/// Lower Cholesky factor of an SPD covariance with the Gaussian normalizing
/// constant precomputed. Shared between the proposals of both chains.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const Matrix& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0)
      throw ParameterError("covariance must be a non-empty square matrix");
    if (!cov.isApprox(cov.transpose(), 1e-12))
      throw ParameterError("covariance must be symmetric");
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
      throw ParameterError("covariance is not positive definite (Cholesky failed)");
    lower_ = llt.matrixL();
    for (Eigen::Index i = 0; i < lower_.rows(); ++i) {
      if (!(lower_(i, i) > 0.0))
        throw ParameterError("covariance is not positive definite (Cholesky failed)");
    }
    log_norm_ = -static_cast<double>(dim()) * kLogSqrt2Pi - lower_.diagonal().array().log().sum();
  }

  Eigen::Index dim() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }
  double log_norm() const noexcept { return log_norm_; }

  /// Squared Mahalanobis norm of v.
  double mahalanobis2(const Point& v) const {
    const Point w = lower_.triangularView<Eigen::Lower>().solve(v);
    return w.squaredNorm();
  }

 private:
  Matrix lower_;
  double log_norm_ = 0.0;
};

/// N(mean, L L'), referencing a shared factor.
struct MultivariateNormal {
  Point mean;
  std::shared_ptr<const CholeskyFactor> factor;

  double log_density(const Point& x) const {
    return factor->log_norm() - 0.5 * factor->mahalanobis2(x - mean);
  }

  Point sample(RngStream& s) const {
    Point z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = s.normal();
    return mean + factor->lower().triangularView<Eigen::Lower>() * z;
  }
};

/// Type-erased density/sampler pair for user-supplied distributions.
template <class T>
struct DensityAndSampler {
  std::function<double(const T&)> log_density_fn;
  std::function<T(RngStream&)> sampler_fn;

  double log_density(const T& x) const { return log_density_fn(x); }
  T sample(RngStream& s) const { return sampler_fn(s); }
};

}  // namespace umcmc
