#pragma once

// Gaussian random-walk Metropolis-Hastings and its maximal-coupling version.

#include <cmath>
#include <memory>
#include <utility>

#include "unbiased_mcmc/coupling.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc {

class RwmhKernel {
 public:
  using State = Point;

  /// Throws ParameterError when proposal_cov is not SPD.
  RwmhKernel(TargetModel target, const Matrix& proposal_cov)
      : target_(std::move(target)), factor_(std::make_shared<const CholeskyFactor>(proposal_cov)) {
    if (factor_->dim() != target_.dim)
      throw ParameterError("proposal covariance dimension does not match the target");
  }

  const TargetModel& target() const noexcept { return target_; }

  MultivariateNormal proposal(const Point& from) const { return {from, factor_}; }

  /// min(1, pi(proposed) / pi(current)).
  double acceptance_probability(const Point& current, const Point& proposed) const {
    const double lp = target_.log_target(proposed);
    const double lc = target_.log_target(current);
    if (lp == kNegInf) return 0.0;
    if (lc == kNegInf) return 1.0;
    return std::min(1.0, std::exp(lp - lc));
  }

  Point single_step(const Point& x, RngStream& s) const {
    Point proposed = proposal(x).sample(s);
    const double log_u = std::log(s.uniform_pos());
    if (detail::mh_accept(log_u, target_.log_target(proposed), target_.log_target(x)))
      return proposed;
    return x;
  }

  CoupledStep<Point> coupled_step(const Point& x, const Point& y, RngStream& s) const {
    auto proposals = maximal_coupling(proposal(x), proposal(y), s);
    const double log_u = std::log(s.uniform_pos());
    const double lpx = target_.log_target(proposals.x);
    // Identical proposals share one evaluation, so the acceptance decisions of
    // met chains cannot diverge.
    const double lpy = proposals.met ? lpx : target_.log_target(proposals.y);
    const double lx = target_.log_target(x);
    const double ly = same_state(x, y) ? lx : target_.log_target(y);
    CoupledStep<Point> out;
    out.x = detail::mh_accept(log_u, lpx, lx) ? std::move(proposals.x) : x;
    out.y = detail::mh_accept(log_u, lpy, ly) ? std::move(proposals.y) : y;
    out.met = same_state(out.x, out.y);
    return out;
  }

 private:
  TargetModel target_;
  std::shared_ptr<const CholeskyFactor> factor_;
};

}  // namespace umcmc
