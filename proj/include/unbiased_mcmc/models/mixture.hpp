#pragma once

// Equal-weight mixture of N(-4, 1) and N(4, 1).

#include <cmath>

#include "unbiased_mcmc/distributions.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc::models {

struct BimodalMixture {
  double left = -4.0;
  double right = 4.0;

  double log_density(double x) const {
    const double a = -0.5 * (x - left) * (x - left);
    const double b = -0.5 * (x - right) * (x - right);
    const double hi = std::max(a, b);
    return hi + std::log(0.5 * std::exp(a - hi) + 0.5 * std::exp(b - hi)) - kLogSqrt2Pi;
  }

  double cdf(double x) const { return 0.5 * std_normal_cdf(x - left) + 0.5 * std_normal_cdf(x - right); }

  /// P(X > threshold).
  double tail(double threshold) const {
    return 0.5 * std_normal_cdf(left - threshold) + 0.5 * std_normal_cdf(right - threshold);
  }

  TargetModel target() const {
    TargetModel t;
    t.dim = 1;
    t.log_target = [m = *this](const Point& x) { return m.log_density(x(0)); };
    return t;
  }
};

}  // namespace umcmc::models
