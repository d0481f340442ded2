#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/kernels/rwmh.hpp"

namespace umcmc {
namespace {

struct ConstantKernel {
  using State = double;
  double single_step(const double&, RngStream&) const { return 1.0; }
  CoupledStep<double> coupled_step(const double&, const double&, RngStream&) const { return {1.0, 1.0, true}; }
};

MeetingTimeSample sample_of(std::vector<long long> taus) {
  MeetingTimeSample s;
  s.taus = std::move(taus);
  return s;
}

TEST(MeetingTimes, ConstantKernelMeetsWithinTwo) {
  const auto sample = sample_meeting_times(ConstantKernel{}, [](RngStream& s) { return s.normal(); }, 200,
                                           StreamFactory(1));
  ASSERT_EQ(sample.R(), 200u);
  for (auto t : sample.taus) EXPECT_LE(t, 2);
  EXPECT_TRUE(sample.timed_out.empty());
}

TEST(MeetingTimes, TimeoutsAreRecordedSeparately) {
  struct Never {
    using State = double;
    double single_step(const double& x, RngStream&) const { return x + 1; }
    CoupledStep<double> coupled_step(const double& x, const double& y, RngStream&) const {
      return {x + 1, y + 3, false};
    }
  };
  const auto sample = sample_meeting_times(Never{}, [](RngStream&) { return 0.0; }, 5, StreamFactory(2), 20);
  EXPECT_EQ(sample.R(), 0u);
  EXPECT_EQ(sample.timed_out.size(), 5u);
}

TEST(MeetingTimes, IndependentOfThreadCount) {
  TargetModel t;
  t.dim = 1;
  t.log_target = [](const Point& x) { return -0.5 * x(0) * x(0); };
  const RwmhKernel k(t, Matrix::Identity(1, 1));
  const auto init = [](RngStream& s) { return Point::Constant(1, s.normal(3.0, 1.0)); };
  const auto a = sample_meeting_times(k, init, 300, StreamFactory(3), kDefaultMaxIter, 1);
  const auto b = sample_meeting_times(k, init, 300, StreamFactory(3), kDefaultMaxIter, 3);
  EXPECT_EQ(a.taus, b.taus);
}

TEST(Quantile, InvertedCdfConvention) {
  const auto s = sample_of({5, 1, 3, 2, 4});
  EXPECT_EQ(s.quantile(0.2), 1);
  EXPECT_EQ(s.quantile(0.21), 2);
  EXPECT_EQ(s.quantile(0.5), 3);
  EXPECT_EQ(s.quantile(0.99), 5);
  EXPECT_EQ(s.quantile(1.0), 5);
  EXPECT_THROW(s.quantile(0.0), ParameterError);
}

TEST(ChooseKm, AllOnes) {
  const auto c = choose_k_m(sample_of(std::vector<long long>(50, 1)));
  EXPECT_EQ(c.k, 1);
  EXPECT_EQ(c.m, 10);
}

TEST(ChooseKm, MonotoneInQuantile) {
  RngStream r(4);
  std::vector<long long> taus;
  for (int i = 0; i < 1000; ++i) taus.push_back(1 + static_cast<long long>(r.index(40)));
  const auto s = sample_of(taus);
  long long prev = 0;
  for (double q = 0.05; q <= 1.0; q += 0.05) {
    const auto c = choose_k_m(s, q, 10);
    EXPECT_GE(c.k, prev);
    EXPECT_EQ(c.m, 10 * c.k);
    prev = c.k;
  }
}

TEST(TvBound, Examples) {
  const auto s = sample_of({3, 10, 47});
  const std::vector<long long> grid{0, 1, 5, 10, 46, 47, 48, 100};
  const auto curve = tv_upper_bound(s, grid);
  ASSERT_EQ(curve.size(), grid.size());
  EXPECT_EQ(curve[0].bound, 1.0);
  EXPECT_EQ(curve[5].bound, 1.0 / 3.0);
  EXPECT_EQ(curve[6].bound, 0.0);
  EXPECT_EQ(curve[7].bound, 0.0);
  // mean tau 20, k = 0: min(1, 21) = 1.
  const auto twenty = sample_of({20, 20});
  const std::vector<long long> zero{0};
  EXPECT_EQ(tv_upper_bound(twenty, zero)[0].bound, 1.0);
}

TEST(TvBound, NonincreasingAndInUnitInterval) {
  RngStream r(5);
  std::vector<long long> taus;
  for (int i = 0; i < 500; ++i) taus.push_back(1 + static_cast<long long>(-std::log(r.uniform_pos()) * 30));
  std::vector<long long> grid;
  for (long long k = 0; k < 400; ++k) grid.push_back(k);
  const auto curve = tv_upper_bound(sample_of(taus), grid);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    EXPECT_GE(curve[i].bound, 0.0);
    EXPECT_LE(curve[i].bound, 1.0);
    if (i > 0) {
      EXPECT_LE(curve[i].bound, curve[i - 1].bound);
    }
  }
}

TEST(Survival, StepFunction) {
  const auto curve = survival_curve(sample_of({1, 2, 2, 4}));
  ASSERT_EQ(curve.size(), 5u);
  EXPECT_EQ(curve[0].survival, 1.0);
  EXPECT_EQ(curve[1].survival, 0.75);
  EXPECT_EQ(curve[2].survival, 0.25);
  EXPECT_EQ(curve[3].survival, 0.25);
  EXPECT_EQ(curve[4].survival, 0.0);
}

TEST(TailFit, GeometricRateRecovered) {
  // tau ~ Geometric(0.5) on {1, 2, ...}: P(tau > t) = 0.5^t.
  RngStream r(6);
  std::vector<long long> taus;
  for (int i = 0; i < 10'000; ++i) {
    long long t = 1;
    while (r.uniform() >= 0.5) ++t;
    taus.push_back(t);
  }
  const auto fit = fit_geometric_tail(sample_of(taus));
  ASSERT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.rate, 0.5, 0.05);
  EXPECT_GE(fit.r_squared, 0.9);
}

TEST(TailFit, ConstantSampleIsDegenerate) {
  const auto fit = fit_geometric_tail(sample_of(std::vector<long long>(200, 7)));
  EXPECT_TRUE(fit.degenerate);
  EXPECT_THROW(fit_geometric_tail(sample_of({1, 2, 3})), ContractError);
}

TEST(TailFit, StandardNormalRwmhHasGeometricTail) {
  TargetModel t;
  t.dim = 1;
  t.log_target = [](const Point& x) { return -0.5 * x(0) * x(0); };
  const RwmhKernel k(t, Matrix::Identity(1, 1));
  const auto init = [](RngStream& s) { return Point::Constant(1, s.normal(3.0, 2.0)); };
  const auto sample = sample_meeting_times(k, init, 5000, StreamFactory(7));
  const auto fit = fit_geometric_tail(sample);
  ASSERT_FALSE(fit.degenerate);
  EXPECT_LT(fit.slope, 0.0);
  EXPECT_GT(fit.rate, 0.0);
  EXPECT_LT(fit.rate, 1.0);
  EXPECT_GE(fit.r_squared, 0.9);
}

}  // namespace
}  // namespace umcmc
