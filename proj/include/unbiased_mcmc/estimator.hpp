#pragma once

// Coupled-chain runs and the unbiased estimators built on them.
//
// Indexing: x_states holds X_0..X_T and y_states holds Y_0..Y_{T-1} with
// T = max(m, tau); the meeting time is tau = min{t >= 1 : X_t == Y_{t-1}}.
//
// Cost convention: X_1 comes from one call to P. Each subsequent transition
// before meeting is one call to P-bar, so calls_coupled = tau - 1. After the
// meeting, X advances alone (Y mirrors it) for max(0, m - tau) calls to P,
// giving calls_single = 1 + max(0, m - tau). The reported cost is
// 2 * calls_coupled + calls_single, in units of one P-call.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc {

inline constexpr long long kDefaultMaxIter = 10'000'000;

template <class State>
struct CoupledRun {
  std::vector<State> x_states;  // X_0..X_T
  std::vector<State> y_states;  // Y_0..Y_{T-1}
  long long tau = 0;
  long long calls_coupled = 0;
  long long calls_single = 0;

  long long T() const noexcept { return static_cast<long long>(x_states.size()) - 1; }
  double cost() const noexcept { return 2.0 * static_cast<double>(calls_coupled) + calls_single; }
};

/// Chains failed to meet within max_iter. Carries the partial run, so nothing
/// is silently truncated.
template <class State>
class RunTimeoutError : public TimeoutError {
 public:
  RunTimeoutError(CoupledRun<State> partial, long long max_iter)
      : TimeoutError("coupled chains did not meet within max_iter = " + std::to_string(max_iter),
                     max_iter),
        partial_(std::make_shared<CoupledRun<State>>(std::move(partial))) {}
  const CoupledRun<State>& partial() const noexcept { return *partial_; }

 private:
  std::shared_ptr<CoupledRun<State>> partial_;
};

namespace detail {

inline void check_km(long long k, long long m) {
  if (k < 0) throw ContractError("k must be nonnegative");
  if (m < k) throw ContractError("m must be >= k");
}

}  // namespace detail

/// Runs the coupled chains until t = max(m, tau), storing the trajectories.
template <CoupledKernel K, class Init>
CoupledRun<typename K::State> run_coupled(const K& kernel, Init&& init_sampler, long long k, long long m,
                                         RngStream& s, long long max_iter = kDefaultMaxIter) {
  using State = typename K::State;
  detail::check_km(k, m);
  if (max_iter <= m) throw ContractError("max_iter must exceed m");
  CoupledRun<State> run;
  run.x_states.push_back(init_sampler(s));
  run.y_states.push_back(init_sampler(s));
  run.x_states.push_back(kernel.single_step(run.x_states[0], s));
  run.calls_single = 1;
  std::optional<long long> tau;
  if (same_state(run.x_states[1], run.y_states[0])) tau = 1;

  long long t = 1;
  while (t < std::max(m, tau.value_or(t + 1))) {
    if (!tau) {
      if (t >= max_iter) {
        run.tau = 0;
        throw RunTimeoutError<State>(std::move(run), max_iter);
      }
      auto step = kernel.coupled_step(run.x_states[t], run.y_states[t - 1], s);
      ++run.calls_coupled;
      const bool met = same_state(step.x, step.y);
      run.x_states.push_back(std::move(step.x));
      run.y_states.push_back(std::move(step.y));
      if (met) tau = t + 1;
    } else {
      run.x_states.push_back(kernel.single_step(run.x_states[t], s));
      run.y_states.push_back(run.x_states.back());
      ++run.calls_single;
    }
    ++t;
  }
  run.tau = *tau;
  return run;
}

struct MeetingResult {
  long long tau = 0;
  long long calls_coupled = 0;
  long long calls_single = 0;
};

/// Runs only until meeting (m = 0) without storing trajectories.
template <CoupledKernel K, class Init>
MeetingResult meeting_time(const K& kernel, Init&& init_sampler, RngStream& s,
                           long long max_iter = kDefaultMaxIter) {
  using State = typename K::State;
  State x0 = init_sampler(s);
  State y = init_sampler(s);
  State x = kernel.single_step(x0, s);
  MeetingResult res{0, 0, 1};
  if (same_state(x, y)) {
    res.tau = 1;
    return res;
  }
  for (long long t = 1;; ++t) {
    if (t >= max_iter)
      throw TimeoutError("coupled chains did not meet within max_iter = " + std::to_string(max_iter),
                         max_iter);
    auto step = kernel.coupled_step(x, y, s);
    ++res.calls_coupled;
    if (same_state(step.x, step.y)) {
      res.tau = t + 1;
      return res;
    }
    x = std::move(step.x);
    y = std::move(step.y);
  }
}

namespace detail {

template <class State>
void check_coverage(const CoupledRun<State>& run, long long needed) {
  if (needed > run.T()) throw ContractError("run is too short for the requested estimator");
}

template <class V>
V zero_like(const V& v) {
  if constexpr (std::is_arithmetic_v<V>) {
    return V{0};
  } else {
    return V::Zero(v.size());
  }
}

}  // namespace detail

/// H_k = h(X_k) + sum_{t=k+1}^{tau-1} (h(X_t) - h(Y_{t-1})).
template <class State, class H>
auto h_k(const CoupledRun<State>& run, H&& h, long long k) {
  if (k < 0) throw ContractError("k must be nonnegative");
  detail::check_coverage(run, std::max(k, run.tau - 1));
  using V = std::decay_t<decltype(h(run.x_states[0]))>;
  V acc = h(run.x_states[k]);
  for (long long t = k + 1; t <= run.tau - 1; ++t) {
    acc += h(run.x_states[t]);
    acc -= h(run.y_states[t - 1]);
  }
  return acc;
}

/// Time-averaged estimator by the rearranged formula:
/// (m-k+1)^-1 sum_{l=k}^m h(X_l) + sum_{l=k}^{tau-1} min(1, (l-k+1)/(m-k+1)) (h(X_{l+1}) - h(Y_l)).
template <class State, class H>
auto h_km(const CoupledRun<State>& run, H&& h, long long k, long long m) {
  detail::check_km(k, m);
  detail::check_coverage(run, std::max(m, run.tau - 1));
  using V = std::decay_t<decltype(h(run.x_states[0]))>;
  const double span = static_cast<double>(m - k + 1);
  V mcmc = h(run.x_states[k]);
  for (long long l = k + 1; l <= m; ++l) mcmc += h(run.x_states[l]);
  V acc = mcmc / span;
  for (long long l = k; l <= run.tau - 1; ++l) {
    const double w = std::min(1.0, static_cast<double>(l - k + 1) / span);
    acc += w * (h(run.x_states[l + 1]) - h(run.y_states[l]));
  }
  return acc;
}

/// Time-averaged estimator as the plain average of H_l over l = k..m.
template <class State, class H>
auto h_km_direct(const CoupledRun<State>& run, H&& h, long long k, long long m) {
  detail::check_km(k, m);
  detail::check_coverage(run, std::max(m, run.tau - 1));
  using V = std::decay_t<decltype(h(run.x_states[0]))>;
  V acc = h_k(run, h, k);
  for (long long l = k + 1; l <= m; ++l) acc += h_k(run, h, l);
  return V(acc / static_cast<double>(m - k + 1));
}

template <class State>
struct Atom {
  double weight = 0.0;
  State point;
};

template <class State>
struct SignedMeasure {
  std::vector<Atom<State>> atoms;

  double total_weight() const {
    double sum = 0.0;
    for (const auto& a : atoms) sum += a.weight;
    return sum;
  }

  template <class H>
  auto integrate(H&& h) const {
    using V = std::decay_t<decltype(h(atoms.front().point))>;
    if (atoms.empty()) throw ContractError("cannot integrate against an empty measure");
    V acc = detail::zero_like(h(atoms.front().point));
    for (const auto& a : atoms) acc += a.weight * h(a.point);
    return acc;
  }
};

/// Delta-mass form of h_km: atoms (1/(m-k+1), X_l) for l = k..m, then pairs
/// (+w_l, X_{l+1}), (-w_l, Y_l) for l = k..tau-1.
template <class State>
SignedMeasure<State> signed_measure(const CoupledRun<State>& run, long long k, long long m) {
  detail::check_km(k, m);
  detail::check_coverage(run, std::max(m, run.tau - 1));
  const double span = static_cast<double>(m - k + 1);
  SignedMeasure<State> mu;
  mu.atoms.reserve(static_cast<std::size_t>(m - k + 1));
  for (long long l = k; l <= m; ++l) mu.atoms.push_back({1.0 / span, run.x_states[l]});
  for (long long l = k; l <= run.tau - 1; ++l) {
    const double w = std::min(1.0, static_cast<double>(l - k + 1) / span);
    mu.atoms.push_back({w, run.x_states[l + 1]});
    mu.atoms.push_back({-w, run.y_states[l]});
  }
  return mu;
}

/// Result of a streaming run: H_{k:m} for one pre-declared test function.
template <class V>
struct StreamingEstimate {
  V value;
  long long tau = 0;
  long long calls_coupled = 0;
  long long calls_single = 0;
  double cost() const noexcept { return 2.0 * static_cast<double>(calls_coupled) + calls_single; }
};

/// Same schedule and random-number consumption as run_coupled, but only the
/// running sums of the rearranged H_{k:m} formula are kept.
template <CoupledKernel K, class Init, class H>
auto run_streaming(const K& kernel, Init&& init_sampler, H&& h, long long k, long long m, RngStream& s,
                   long long max_iter = kDefaultMaxIter) {
  using State = typename K::State;
  detail::check_km(k, m);
  if (max_iter <= m) throw ContractError("max_iter must exceed m");
  const double span = static_cast<double>(m - k + 1);

  State x0 = init_sampler(s);
  State y = init_sampler(s);  // Y_{t-1}
  State x = kernel.single_step(x0, s);  // X_t, t = 1
  using V = std::decay_t<decltype(h(x0))>;
  V mcmc = detail::zero_like(h(x0));
  V corr = detail::zero_like(h(x0));
  if (k == 0) mcmc += h(x0);
  if (k <= 1 && 1 <= m) mcmc += h(x);
  // Term l = 0 of the correction sum, h(X_1) - h(Y_0); zero if they are equal.
  if (k == 0) corr += std::min(1.0, 1.0 / span) * (h(x) - h(y));

  StreamingEstimate<V> out{V{}, 0, 0, 1};
  std::optional<long long> tau;
  if (same_state(x, y)) tau = 1;
  long long t = 1;
  while (t < std::max(m, tau.value_or(t + 1))) {
    if (!tau) {
      if (t >= max_iter)
        throw TimeoutError("coupled chains did not meet within max_iter = " + std::to_string(max_iter),
                           max_iter);
      auto step = kernel.coupled_step(x, y, s);
      ++out.calls_coupled;
      // Term l = t of the correction sum: h(X_{t+1}) - h(Y_t).
      if (t >= k) {
        const double w = std::min(1.0, static_cast<double>(t - k + 1) / span);
        corr += w * (h(step.x) - h(step.y));
      }
      if (same_state(step.x, step.y)) tau = t + 1;
      x = std::move(step.x);
      y = std::move(step.y);
    } else {
      x = kernel.single_step(x, s);
      ++out.calls_single;
    }
    ++t;
    if (t >= k && t <= m) mcmc += h(x);
  }
  out.tau = *tau;
  out.value = mcmc / span + corr;
  return out;
}

}  // namespace umcmc
