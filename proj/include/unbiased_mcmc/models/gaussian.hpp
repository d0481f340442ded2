#pragma once

// N(0, V) with V_ij = rho^|i-j|. The precision of this AR(1) covariance is
// tridiagonal, so log-density, gradient and full conditionals cost O(d).

#include <cmath>
#include <memory>

#include "unbiased_mcmc/distributions.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc::models {

class Ar1Gaussian {
 public:
  Ar1Gaussian(Eigen::Index dim, double rho = 0.5) : dim_(dim), rho_(rho) {
    if (dim < 1) throw ParameterError("dimension must be >= 1");
    if (!(std::abs(rho) < 1.0)) throw ParameterError("|rho| must be < 1");
    cov_.resize(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) cov_(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    }
    const double c = 1.0 / (1.0 - rho * rho);
    diag_ = Point::Constant(dim, (1.0 + rho * rho) * c);
    diag_(0) = c;
    diag_(dim - 1) = c;
    if (dim == 1) diag_(0) = 1.0;
    off_ = Point::Constant(std::max<Eigen::Index>(dim - 1, 0), -rho * c);
    factor_ = std::make_shared<const CholeskyFactor>(cov_);
  }

  Eigen::Index dim() const noexcept { return dim_; }
  const Matrix& covariance() const noexcept { return cov_; }

  Matrix precision() const {
    Matrix q = Matrix::Zero(dim_, dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) q(i, i) = diag_(i);
    for (Eigen::Index i = 0; i + 1 < dim_; ++i) q(i, i + 1) = q(i + 1, i) = off_(i);
    return q;
  }

  /// Q x for the tridiagonal precision.
  Point precision_times(const Point& x) const {
    Point out = diag_.cwiseProduct(x);
    for (Eigen::Index i = 0; i + 1 < dim_; ++i) {
      out(i) += off_(i) * x(i + 1);
      out(i + 1) += off_(i) * x(i);
    }
    return out;
  }

  double log_density_unnormalized(const Point& x) const { return -0.5 * x.dot(precision_times(x)); }

  Point sample(RngStream& s) const { return MultivariateNormal{Point::Zero(dim_), factor_}.sample(s); }

  TargetModel target() const {
    TargetModel t;
    t.dim = dim_;
    auto self = std::make_shared<const Ar1Gaussian>(*this);
    t.log_target = [self](const Point& x) { return self->log_density_unnormalized(x); };
    t.grad_log_target = [self](const Point& x) -> Point { return -self->precision_times(x); };
    t.log_conditional = [self](const Point& x, Eigen::Index i, double v) {
      double lin = 0.0;
      if (i > 0) lin += self->off_(i - 1) * x(i - 1);
      if (i + 1 < self->dim_) lin += self->off_(i) * x(i + 1);
      return -0.5 * self->diag_(i) * v * v - v * lin;
    };
    return t;
  }

 private:
  Eigen::Index dim_;
  double rho_;
  Matrix cov_;
  Point diag_;
  Point off_;
  std::shared_ptr<const CholeskyFactor> factor_;
};

}  // namespace umcmc::models
