#pragma once

// Primitive couplings of pairs of distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "unbiased_mcmc/distributions.hpp"
#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc {

inline constexpr std::uint64_t kDefaultCouplingGuard = 100'000'000;

template <class T>
struct CouplingOutcome {
  T x;
  T y;
  bool met = false;
  /// Cost in units of (one draw + two density evaluations). Expected value is
  /// 2 for every pair of distributions.
  std::uint64_t units = 0;
};

template <class D>
concept SampleableDensity = requires(const D& d, RngStream& s) {
  { d.sample(s) };
  { d.log_density(d.sample(s)) } -> std::convertible_to<double>;
};

/// Samples (X, Y) from a maximal coupling of p and q, so X ~ p, Y ~ q and
/// P(X = Y) = 1 - TV(p, q).
///
/// Both densities must be normalized: the acceptance test compares p and q
/// pointwise, so differing unknown constants would break maximality (and the
/// marginal of Y). Comparisons are carried out in log space.
template <SampleableDensity P, SampleableDensity Q>
auto maximal_coupling(const P& p, const Q& q, RngStream& s,
                      std::uint64_t guard = kDefaultCouplingGuard) {
  using T = std::decay_t<decltype(p.sample(s))>;
  CouplingOutcome<T> out{p.sample(s), T{}, false, 1};
  const double log_w = p.log_density(out.x) + std::log(s.uniform_pos());
  if (log_w <= q.log_density(out.x)) {
    out.y = out.x;
    out.met = true;
    return out;
  }
  for (std::uint64_t attempt = 0; attempt < guard; ++attempt) {
    ++out.units;
    T candidate = q.sample(s);
    const double log_w_star = q.log_density(candidate) + std::log(s.uniform_pos());
    if (log_w_star > p.log_density(candidate)) {
      out.y = std::move(candidate);
      out.met = same_state(out.x, out.y);
      return out;
    }
  }
  throw RunawayCouplingError(
      "maximal coupling rejection loop exceeded its guard; check that each density "
      "is normalized and matches its sampler");
}

namespace detail {

inline double neumaier_sum(std::span<const double> v) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// Index drawn proportionally to nonnegative weights summing to total > 0.
inline std::size_t draw_weighted(std::span<const double> weights, double total, RngStream& s) {
  const double u = s.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] <= 0.0) continue;
    acc += weights[n];
    last_positive = n;
    if (u < acc) return n;
  }
  if (last_positive == weights.size()) throw ParameterError("all weights are zero");
  return last_positive;
}

inline void check_probability_vector(std::span<const double> q, const char* name) {
  for (double v : q) {
    if (!(v >= 0.0)) throw ParameterError(std::string(name) + " has a negative or NaN entry");
  }
  if (std::abs(neumaier_sum(q) - 1.0) > 1e-12)
    throw ParameterError(std::string(name) + " does not sum to 1");
}

}  // namespace detail

struct IndexPair {
  std::size_t i = 0;
  std::size_t j = 0;
};

/// Maximal coupling of two probability vectors over {0, ..., N-1}; O(N).
inline IndexPair maximal_coupling_discrete(std::span<const double> q, std::span<const double> q_tilde,
                                           RngStream& s) {
  if (q.size() != q_tilde.size() || q.empty())
    throw ParameterError("discrete coupling requires non-empty vectors of equal length");
  detail::check_probability_vector(q, "q");
  detail::check_probability_vector(q_tilde, "q_tilde");

  const std::size_t n = q.size();
  std::vector<double> overlap(n);
  std::vector<double> resid_q(n);
  std::vector<double> resid_qt(n);
  for (std::size_t k = 0; k < n; ++k) {
    overlap[k] = std::min(q[k], q_tilde[k]);
    resid_q[k] = q[k] - overlap[k];
    resid_qt[k] = q_tilde[k] - overlap[k];
  }
  const double alpha = detail::neumaier_sum(overlap);
  const double rq = detail::neumaier_sum(resid_q);
  const double rqt = detail::neumaier_sum(resid_qt);

  // Residual mass exactly zero means q == q_tilde: alpha is 1 up to rounding.
  const bool identical = rq <= 0.0 || rqt <= 0.0;
  const double u = s.uniform();
  if (identical || (alpha > 0.0 && u < alpha)) {
    const std::size_t i = detail::draw_weighted(overlap, alpha, s);
    return {i, i};
  }
  const std::size_t i = detail::draw_weighted(resid_q, rq, s);
  const std::size_t j = detail::draw_weighted(resid_qt, rqt, s);
  return {i, j};
}

/// Common random numbers: one noise draw feeds both parameterizations.
template <class F, class Params, class NoiseSampler>
auto crn_pair(F&& sampler_from_noise, const Params& params_x, const Params& params_y, RngStream& s,
              NoiseSampler&& noise) {
  const auto z = noise(s);
  return std::pair{sampler_from_noise(params_x, z), sampler_from_noise(params_y, z)};
}

template <class F, class Params>
auto crn_pair(F&& sampler_from_noise, const Params& params_x, const Params& params_y, RngStream& s) {
  return crn_pair(std::forward<F>(sampler_from_noise), params_x, params_y, s,
                  [](RngStream& r) { return r.normal(); });
}

/// Increasing rearrangement: x = F_p^-(U), y = F_q^-(U) for one U in (0, 1).
template <class InvP, class InvQ>
std::pair<double, double> quantile_coupling(InvP&& inv_cdf_p, InvQ&& inv_cdf_q, RngStream& s) {
  const double u = s.uniform_open();
  return {inv_cdf_p(u), inv_cdf_q(u)};
}

}  // namespace umcmc
