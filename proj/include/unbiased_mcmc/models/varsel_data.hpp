#pragma once

#include <array>
#include <cmath>

#include "unbiased_mcmc/distributions.hpp"
#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc::models {

struct VarSelData {
  Matrix X;
  Point Y;
  Point beta_star;
};

inline constexpr std::array<double, 10> kVarSelSignal{2, -3, 2, 2, -3, 3, -2, 3, -2, 3};

/// X_ij iid N(0,1), beta* = SNR sqrt(sigma0^2 log(p) / n) (2,-3,2,2,-3,3,-2,3,-2,3,0,...,0),
/// Y = X beta* + N(0, I). X is filled row by row, then the noise is drawn.
inline VarSelData generate_varsel_data(std::size_t p, std::size_t n, double snr, double sigma0_sq,
                                       std::uint64_t seed) {
  if (p < kVarSelSignal.size()) throw ParameterError("p must be at least 10 to place the signal");
  if (n < 1) throw ParameterError("n must be >= 1");
  RngStream s = StreamFactory(seed).derive(0, "varsel-data");
  VarSelData d;
  const auto pi = static_cast<Eigen::Index>(p);
  const auto ni = static_cast<Eigen::Index>(n);
  d.X.resize(ni, pi);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < pi; ++j) d.X(i, j) = s.normal();
  }
  const double scale = snr * std::sqrt(sigma0_sq * std::log(static_cast<double>(p)) / static_cast<double>(n));
  d.beta_star = Point::Zero(pi);
  for (std::size_t j = 0; j < kVarSelSignal.size(); ++j) d.beta_star(static_cast<Eigen::Index>(j)) = scale * kVarSelSignal[j];
  d.Y = d.X * d.beta_star;
  for (Eigen::Index i = 0; i < ni; ++i) d.Y(i) += s.normal();
  return d;
}

}  // namespace umcmc::models
