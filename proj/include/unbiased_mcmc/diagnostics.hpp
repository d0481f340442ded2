#pragma once

// Meeting-time studies: sampling tau, the quantile heuristic for (k, m), the
// coupling bound on the total variation distance to the target, and a
// geometric fit of the survival tail.

#include <algorithm>
#include <span>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/estimator.hpp"
#include "unbiased_mcmc/parallel.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc {

struct MeetingTimeSample {
  std::vector<long long> taus;
  /// Replicates that hit max_iter; they are excluded from taus.
  std::vector<std::size_t> timed_out;
  std::string label;

  std::size_t R() const noexcept { return taus.size(); }

  double mean() const {
    if (taus.empty()) throw ContractError("empty meeting-time sample");
    double s = 0.0;
    for (auto t : taus) s += static_cast<double>(t);
    return s / static_cast<double>(taus.size());
  }

  long long max() const {
    if (taus.empty()) throw ContractError("empty meeting-time sample");
    return *std::max_element(taus.begin(), taus.end());
  }

  /// Inverted-CDF (type 1) quantile: the smallest tau with F(tau) >= q.
  long long quantile(double q) const {
    if (taus.empty()) throw ContractError("empty meeting-time sample");
    if (!(q > 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in (0, 1]");
    std::vector<long long> sorted = taus;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
    idx = std::clamp<std::size_t>(idx, 1, sorted.size());
    return sorted[idx - 1];
  }
};

/// R runs until meeting, replicate r using stream (r, "meeting") of the factory.
/// Timeouts are recorded per replicate rather than thrown.
template <CoupledKernel K, class Init>
MeetingTimeSample sample_meeting_times(const K& kernel, const Init& init_sampler, std::size_t R,
                                       const StreamFactory& factory, long long max_iter = kDefaultMaxIter,
                                       std::size_t threads = 1, std::string label = {}) {
  if (R < 1) throw ContractError("R must be >= 1");
  const auto results = run_replicates(R, threads, [&](std::size_t r) -> long long {
    RngStream s = factory.derive(r, "meeting");
    try {
      return meeting_time(kernel, init_sampler, s, max_iter).tau;
    } catch (const TimeoutError&) {
      return -1;
    }
  });
  MeetingTimeSample out;
  out.label = std::move(label);
  for (std::size_t r = 0; r < R; ++r) {
    if (results[r] < 0) {
      out.timed_out.push_back(r);
    } else {
      out.taus.push_back(results[r]);
    }
  }
  return out;
}

struct KmChoice {
  long long k = 0;
  long long m = 0;
};

inline KmChoice choose_k_m(const MeetingTimeSample& sample, double quantile = 0.99, long long multiplier = 10) {
  if (multiplier < 1) throw ParameterError("multiplier must be a positive integer");
  const long long k = sample.quantile(quantile);
  return {k, multiplier * k};
}

struct TvPoint {
  long long k = 0;
  double bound = 0.0;
};

/// d_TV(pi_k, pi) <= min(1, E[max(0, tau - k + 1)]), estimated by the sample mean.
inline std::vector<TvPoint> tv_upper_bound(const MeetingTimeSample& sample, std::span<const long long> k_grid) {
  if (sample.taus.empty()) throw ContractError("empty meeting-time sample");
  std::vector<TvPoint> out;
  out.reserve(k_grid.size());
  const auto n = static_cast<double>(sample.taus.size());
  for (long long k : k_grid) {
    double acc = 0.0;
    for (long long tau : sample.taus) acc += static_cast<double>(std::max(0LL, tau - k + 1));
    out.push_back({k, std::min(1.0, acc / n)});
  }
  return out;
}

struct SurvivalPoint {
  long long t = 0;
  double survival = 0.0;  // empirical P(tau > t)
};

inline std::vector<SurvivalPoint> survival_curve(const MeetingTimeSample& sample) {
  if (sample.taus.empty()) throw ContractError("empty meeting-time sample");
  std::vector<long long> sorted = sample.taus;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<SurvivalPoint> out;
  for (long long t = 0; t <= sorted.back(); ++t) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    out.push_back({t, static_cast<double>(above) / n});
  }
  return out;
}

struct TailFit {
  bool degenerate = false;
  double slope = 0.0;
  double rate = 0.0;  // exp(slope): estimate of delta in P(tau > t) <= C delta^t
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (t, log P(tau > t)) for integer t between the
/// median and the 99% quantile. The lower half of the sample is excluded.
inline TailFit fit_geometric_tail(const MeetingTimeSample& sample) {
  if (sample.taus.size() < 100) throw ContractError("tail fit needs at least 100 meeting times");
  TailFit fit;
  const long long lo = sample.quantile(0.5);
  const long long hi = sample.quantile(0.99);
  std::vector<long long> sorted = sample.taus;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<double> ts;
  std::vector<double> ls;
  for (long long t = lo; t <= hi; ++t) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    if (above == 0) break;
    ts.push_back(static_cast<double>(t));
    ls.push_back(std::log(static_cast<double>(above) / n));
  }
  fit.points = ts.size();
  if (sorted.front() == sorted.back() || ts.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const double k = static_cast<double>(ts.size());
  double mt = 0.0;
  double ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= k;
  ml /= k;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (ls[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
    syy += (ls[i] - ml) * (ls[i] - ml);
  }
  fit.slope = sxy / sxx;
  fit.rate = std::exp(fit.slope);
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace umcmc
