#pragma once

// Conjugate Gibbs sampler for the hierarchical Poisson-Gamma pump-failure
// model, coupled through a maximal coupling of every full conditional.
//
// State layout: (lambda_1, ..., lambda_K, beta).

#include <array>
#include <numeric>

#include "unbiased_mcmc/coupling.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc {

struct PumpData {
  static constexpr int kPumps = 10;
  std::array<double, kPumps> t{};  // operating times
  std::array<int, kPumps> s{};     // failure counts
};

struct PumpHyper {
  double alpha = 1.802;
  double gamma = 0.01;
  double delta = 1.0;
};

class PumpGibbsKernel {
 public:
  using State = Point;
  static constexpr int K = PumpData::kPumps;

  PumpGibbsKernel(PumpData data, PumpHyper hyper = {}) : data_(data), hyper_(hyper) {
    if (!(hyper_.alpha > 0.0 && hyper_.gamma > 0.0 && hyper_.delta > 0.0))
      throw ParameterError("pump hyperparameters must be positive");
  }

  const PumpData& data() const noexcept { return data_; }
  const PumpHyper& hyper() const noexcept { return hyper_; }

  Gamma lambda_conditional(int n, double beta) const {
    return Gamma(hyper_.alpha + data_.s[n], beta + data_.t[n]);
  }

  Gamma beta_conditional(double lambda_sum) const {
    return Gamma(hyper_.gamma + K * hyper_.alpha, hyper_.delta + lambda_sum);
  }

  Point single_step(const Point& x, RngStream& s) const {
    check_state(x);
    Point out(K + 1);
    for (int n = 0; n < K; ++n) out(n) = lambda_conditional(n, x(K)).sample(s);
    out(K) = beta_conditional(out.head(K).sum()).sample(s);
    return out;
  }

  CoupledStep<Point> coupled_step(const Point& x, const Point& y, RngStream& s) const {
    check_state(x);
    check_state(y);
    CoupledStep<Point> out{Point(K + 1), Point(K + 1), false};
    for (int n = 0; n < K; ++n) {
      const auto c = maximal_coupling(lambda_conditional(n, x(K)), lambda_conditional(n, y(K)), s);
      out.x(n) = c.x;
      out.y(n) = c.y;
    }
    const auto b = maximal_coupling(beta_conditional(out.x.head(K).sum()),
                                    beta_conditional(out.y.head(K).sum()), s);
    out.x(K) = b.x;
    out.y(K) = b.y;
    out.met = same_state(out.x, out.y);
    return out;
  }

 private:
  void check_state(const Point& x) const {
    if (x.size() != K + 1) throw ParameterError("pump state must have K + 1 entries");
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!(x(i) > 0.0)) throw ParameterError("pump state entries must be positive");
    }
  }

  PumpData data_;
  PumpHyper hyper_;
};

}  // namespace umcmc
