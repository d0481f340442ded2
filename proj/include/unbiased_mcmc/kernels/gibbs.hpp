#pragma once

// Metropolis-within-Gibbs with a systematic scan; each univariate update is a
// random-walk MH step whose proposals are maximally coupled across chains.

#include <cmath>
#include <utility>

#include "unbiased_mcmc/coupling.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc {

class MhWithinGibbsKernel {
 public:
  using State = Point;

  MhWithinGibbsKernel(TargetModel target, double per_coordinate_sd, int steps_per_coordinate)
      : target_(std::move(target)), sd_(per_coordinate_sd), steps_(steps_per_coordinate) {
    if (!(sd_ > 0.0)) throw ParameterError("per-coordinate proposal sd must be positive");
    if (steps_ < 1) throw ParameterError("steps per coordinate must be >= 1");
    if (target_.dim < 1) throw ParameterError("target dimension must be >= 1");
  }

  Point single_step(const Point& x, RngStream& s) const {
    Point cur = x;
    for (Eigen::Index i = 0; i < cur.size(); ++i) {
      for (int r = 0; r < steps_; ++r) {
        const double v = Normal(cur(i), sd_).sample(s);
        const double log_u = std::log(s.uniform_pos());
        if (detail::mh_accept(log_u, target_.conditional(cur, i, v), target_.conditional(cur, i, cur(i))))
          cur(i) = v;
      }
    }
    return cur;
  }

  CoupledStep<Point> coupled_step(const Point& x, const Point& y, RngStream& s) const {
    CoupledStep<Point> out{x, y, false};
    Point& cx = out.x;
    Point& cy = out.y;
    for (Eigen::Index i = 0; i < cx.size(); ++i) {
      for (int r = 0; r < steps_; ++r) {
        const auto prop = maximal_coupling(Normal(cx(i), sd_), Normal(cy(i), sd_), s);
        const double log_u = std::log(s.uniform_pos());
        const double lx_new = target_.conditional(cx, i, prop.x);
        const double lx_old = target_.conditional(cx, i, cx(i));
        const bool same = same_state(cx, cy);
        const double ly_new = same && prop.met ? lx_new : target_.conditional(cy, i, prop.y);
        const double ly_old = same ? lx_old : target_.conditional(cy, i, cy(i));
        if (detail::mh_accept(log_u, lx_new, lx_old)) cx(i) = prop.x;
        if (detail::mh_accept(log_u, ly_new, ly_old)) cy(i) = prop.y;
      }
    }
    out.met = same_state(cx, cy);
    return out;
  }

 private:
  TargetModel target_;
  double sd_;
  int steps_;
};

}  // namespace umcmc
