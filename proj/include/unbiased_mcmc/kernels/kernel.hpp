#pragma once

#include <concepts>
#include <functional>
#include <utility>

#include "unbiased_mcmc/distributions.hpp"
#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/rng.hpp"

namespace umcmc {

template <class State>
struct CoupledStep {
  State x;
  State y;
  bool met = false;
};

/// A Markov kernel P together with a coupling P-bar of P with itself.
///
/// Requirements not expressible in the type system:
///  * each marginal of coupled_step has the law of single_step;
///  * equal inputs give equal outputs and met = true;
///  * met is exactly the bitwise-equality predicate of the outputs.
template <class K>
concept CoupledKernel = requires(const K& k, const typename K::State& x, RngStream& s) {
  typename K::State;
  { k.single_step(x, s) } -> std::same_as<typename K::State>;
  { k.coupled_step(x, x, s) } -> std::same_as<CoupledStep<typename K::State>>;
};

/// Target density pi on R^dim, known up to a constant.
struct TargetModel {
  Eigen::Index dim = 0;
  std::function<double(const Point&)> log_target;
  /// Optional.
  std::function<Point(const Point&)> grad_log_target;
  /// Optional: log pi(x with x(i) = v) up to an additive constant that may
  /// depend on the other coordinates but not on v. Lets coordinate-wise
  /// kernels avoid full evaluations.
  std::function<double(const Point&, Eigen::Index, double)> log_conditional;

  bool has_gradient() const noexcept { return static_cast<bool>(grad_log_target); }

  double conditional(const Point& x, Eigen::Index i, double v) const {
    if (log_conditional) return log_conditional(x, i, v);
    Point z = x;
    z(i) = v;
    return log_target(z);
  }
};

namespace detail {

// log U <= log pi(proposal) - log pi(current), treating a current state outside
// the support as always left.
inline bool mh_accept(double log_u, double log_pi_proposal, double log_pi_current) {
  if (log_pi_proposal == kNegInf) return false;
  if (log_pi_current == kNegInf) return true;
  return log_u <= log_pi_proposal - log_pi_current;
}

}  // namespace detail

/// Composes `thin` base steps into one logical step (both for P and P-bar).
template <CoupledKernel Base>
class ThinnedKernel {
 public:
  using State = typename Base::State;

  ThinnedKernel(Base base, int thin) : base_(std::move(base)), thin_(thin) {
    if (thin < 1) throw ParameterError("thinning factor must be >= 1");
  }

  State single_step(const State& x, RngStream& s) const {
    State cur = base_.single_step(x, s);
    for (int j = 1; j < thin_; ++j) cur = base_.single_step(cur, s);
    return cur;
  }

  CoupledStep<State> coupled_step(const State& x, const State& y, RngStream& s) const {
    auto step = base_.coupled_step(x, y, s);
    for (int j = 1; j < thin_; ++j) step = base_.coupled_step(step.x, step.y, s);
    return step;
  }

 private:
  Base base_;
  int thin_;
};

}  // namespace umcmc
