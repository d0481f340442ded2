#pragma once

// Hamiltonian Monte Carlo with common random numbers, mixed with a small-step
// coupled random-walk MH kernel. CRN-coupled HMC trajectories contract towards
// each other on log-concave targets but never coalesce; the MH component is
// what produces exact meetings once the chains are close.

#include <cmath>
#include <utility>

#include "unbiased_mcmc/kernels/kernel.hpp"
#include "unbiased_mcmc/kernels/rwmh.hpp"

namespace umcmc {

struct PhasePoint {
  Point position;
  Point momentum;
};

/// Leapfrog integration of dq/dt = p, dp/dt = grad log pi(q): half momentum
/// step, L - 1 alternating full steps, final half step.
template <class Grad>
PhasePoint leapfrog(const Grad& grad_log_target, const Point& q0, const Point& p0, double step_size,
                    int steps) {
  if (!(step_size > 0.0)) throw ParameterError("leapfrog step size must be positive");
  if (steps < 1) throw ParameterError("leapfrog needs at least one step");
  auto grad = [&](const Point& q) {
    Point g = grad_log_target(q);
    if (!g.allFinite()) throw NumericalError("non-finite gradient in leapfrog");
    return g;
  };
  Point q = q0;
  Point p = p0 + 0.5 * step_size * grad(q);
  for (int l = 1; l <= steps; ++l) {
    q += step_size * p;
    if (l < steps) p += step_size * grad(q);
  }
  p += 0.5 * step_size * grad(q);
  return {std::move(q), std::move(p)};
}

struct HmcSettings {
  double step_size = 0.1;
  int steps = 20;
  double mh_variance = 1e-5;
  double hmc_prob = 0.9;
};

class HmcMixtureKernel {
 public:
  using State = Point;

  /// Throws CapabilityError if the target has no gradient.
  HmcMixtureKernel(TargetModel target, HmcSettings settings)
      : target_(std::move(target)),
        settings_(settings),
        rwmh_(target_, settings.mh_variance * Matrix::Identity(target_.dim, target_.dim)) {
    if (!target_.has_gradient()) throw CapabilityError("HMC requires grad_log_target");
    if (!(settings_.hmc_prob >= 0.0 && settings_.hmc_prob <= 1.0))
      throw ParameterError("hmc_prob must lie in [0, 1]");
    if (!(settings_.step_size > 0.0) || settings_.steps < 1)
      throw ParameterError("HMC needs step_size > 0 and steps >= 1");
  }

  const HmcSettings& settings() const noexcept { return settings_; }

  Point single_step(const Point& x, RngStream& s) const {
    if (s.uniform() < settings_.hmc_prob) {
      const Point p0 = draw_momentum(s);
      const double log_u = std::log(s.uniform_pos());
      return hmc_transition(x, p0, log_u);
    }
    return rwmh_.single_step(x, s);
  }

  CoupledStep<Point> coupled_step(const Point& x, const Point& y, RngStream& s) const {
    if (s.uniform() < settings_.hmc_prob) {
      const Point p0 = draw_momentum(s);
      const double log_u = std::log(s.uniform_pos());
      CoupledStep<Point> out;
      out.x = hmc_transition(x, p0, log_u);
      out.y = same_state(x, y) ? out.x : hmc_transition(y, p0, log_u);
      out.met = same_state(out.x, out.y);
      return out;
    }
    return rwmh_.coupled_step(x, y, s);
  }

  /// One HMC transition from x with the given initial momentum and log-uniform.
  Point hmc_transition(const Point& x, const Point& p0, double log_u) const {
    const auto end = leapfrog(target_.grad_log_target, x, p0, settings_.step_size, settings_.steps);
    const double h_old = -target_.log_target(x) + 0.5 * p0.squaredNorm();
    const double h_new = -target_.log_target(end.position) + 0.5 * end.momentum.squaredNorm();
    if (std::isfinite(h_new) && log_u <= h_old - h_new) return end.position;
    return x;
  }

 private:
  Point draw_momentum(RngStream& s) const {
    Point p(target_.dim);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = s.normal();
    return p;
  }

  TargetModel target_;
  HmcSettings settings_;
  RwmhKernel rwmh_;
};

}  // namespace umcmc
