#pragma once

// Two-module HPV / cervical cancer model.
//
// Module 1: theta1_i ~ Beta(1, 1) a priori, ncases_i ~ Binomial(npop_i, theta1_i),
// so pi1 is a product of Beta(1 + ncases_i, 1 + npop_i - ncases_i).
// Module 2: cases_i ~ Poisson(exp(theta2_1 + theta1_i theta2_2 + offset_i)),
// theta2 ~ N(0, 1000 I). The offset is the log of follow-up (woman-years, in
// thousands in the shipped data).

#include <cmath>
#include <memory>
#include <vector>

#include "unbiased_mcmc/distributions.hpp"
#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc::models {

struct HpvRow {
  int ncases = 0;
  int npop = 0;
};

struct CancerRow {
  int ncases = 0;
  double log_pyears = 0.0;
};

class CutModel {
 public:
  static constexpr double kPriorVariance = 1000.0;

  CutModel(std::vector<HpvRow> hpv, std::vector<CancerRow> cancer)
      : hpv_(std::move(hpv)), cancer_(std::move(cancer)) {
    if (hpv_.size() != cancer_.size() || hpv_.empty())
      throw ParameterError("HPV and cancer data must have the same, non-zero number of rows");
    for (const auto& r : hpv_) {
      if (r.ncases < 0 || r.npop < r.ncases) throw ParameterError("HPV counts must satisfy 0 <= ncases <= npop");
    }
    for (const auto& r : cancer_) {
      if (r.ncases < 0) throw ParameterError("cancer counts must be nonnegative");
    }
  }

  std::size_t groups() const noexcept { return hpv_.size(); }
  const std::vector<HpvRow>& hpv() const noexcept { return hpv_; }
  const std::vector<CancerRow>& cancer() const noexcept { return cancer_; }

  /// Exact draw from pi1.
  Point sample_theta1(RngStream& s) const {
    Point th(static_cast<Eigen::Index>(groups()));
    for (std::size_t i = 0; i < groups(); ++i) {
      th(static_cast<Eigen::Index>(i)) = s.beta(1.0 + hpv_[i].ncases, 1.0 + hpv_[i].npop - hpv_[i].ncases);
    }
    return th;
  }

  double log_pi2(const Point& theta2, const Point& theta1) const {
    double lp = -0.5 * theta2.squaredNorm() / kPriorVariance;
    for (std::size_t i = 0; i < groups(); ++i) {
      const double eta = theta2(0) + theta1(static_cast<Eigen::Index>(i)) * theta2(1) + cancer_[i].log_pyears;
      lp += cancer_[i].ncases * eta - std::exp(eta);
    }
    return lp;
  }

  Point grad_log_pi2(const Point& theta2, const Point& theta1) const {
    Point g = -theta2 / kPriorVariance;
    for (std::size_t i = 0; i < groups(); ++i) {
      const double t1 = theta1(static_cast<Eigen::Index>(i));
      const double eta = theta2(0) + t1 * theta2(1) + cancer_[i].log_pyears;
      const double r = cancer_[i].ncases - std::exp(eta);
      g(0) += r;
      g(1) += r * t1;
    }
    return g;
  }

  /// Stage-2 target pi2(. | theta1).
  TargetModel stage2_target(const Point& theta1) const {
    TargetModel t;
    t.dim = 2;
    auto self = std::make_shared<const CutModel>(*this);
    t.log_target = [self, theta1](const Point& th2) { return self->log_pi2(th2, theta1); };
    t.grad_log_target = [self, theta1](const Point& th2) { return self->grad_log_pi2(th2, theta1); };
    return t;
  }

 private:
  std::vector<HpvRow> hpv_;
  std::vector<CancerRow> cancer_;
};

}  // namespace umcmc::models
