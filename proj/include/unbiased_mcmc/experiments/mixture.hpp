#pragma once

// Bimodal mixture 0.5 N(-4, 1) + 0.5 N(4, 1) sampled by random-walk MH with
// proposal sd sigma_q from pi_0 = N(init_mean, init_sd^2).
//
// Outputs: estimates.csv, histogram.csv, meetingtimes.csv and, when the
// table section is enabled, table.csv (cost, variance and inefficiency / V_inf
// over a grid of (k, m)).

#include <string>
#include <vector>

#include "unbiased_mcmc/aggregate.hpp"
#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/estimator.hpp"
#include "unbiased_mcmc/experiments/common.hpp"
#include "unbiased_mcmc/kernels/rwmh.hpp"
#include "unbiased_mcmc/models/mixture.hpp"

namespace umcmc::experiments {

struct MixtureTableConfig {
  bool enabled = false;
  std::vector<long long> k{1, 100, 200};
  std::vector<long long> multipliers{1, 10, 20};
  long long R = 1000;
  double threshold = 3.0;
  long long v_inf_iterations = 1'000'000;
  long long v_inf_burn_in = 10'000;
};

struct MixtureConfig {
  std::string regime = "easy";
  double sigma_q = 3.0;
  double init_mean = 10.0;
  double init_sd = 10.0;
  long long k = 200;
  long long m = 4000;
  long long R = 1000;
  long long meeting_R = 1000;
  long long max_iter = kDefaultMaxIter;
  std::vector<double> thresholds{3.0};
  double hist_lo = -10.0;
  double hist_hi = 10.0;
  long long hist_bins = 40;
  MixtureTableConfig table;
};

inline MixtureConfig parse_mixture_config(ConfigObject& c, const RunOptions& opt) {
  MixtureConfig cfg;
  cfg.regime = c.string("regime", cfg.regime);
  cfg.sigma_q = c.real("sigma_q", cfg.sigma_q);
  cfg.init_mean = c.real("init_mean", cfg.init_mean);
  cfg.init_sd = c.real("init_sd", cfg.init_sd);
  cfg.k = c.integer("k", cfg.k);
  cfg.m = c.integer("m", cfg.m);
  cfg.R = c.replicates("R", cfg.R, opt);
  cfg.meeting_R = c.integer("meeting_R", cfg.meeting_R);
  cfg.max_iter = c.integer("max_iter", cfg.max_iter);
  cfg.thresholds = c.reals("thresholds", cfg.thresholds);
  cfg.hist_lo = c.real("hist_lo", cfg.hist_lo);
  cfg.hist_hi = c.real("hist_hi", cfg.hist_hi);
  cfg.hist_bins = c.integer("hist_bins", cfg.hist_bins);
  cfg.table = c.nested("table", [](ConfigObject& t) {
    MixtureTableConfig tc;
    tc.enabled = t.boolean("enabled", tc.enabled);
    tc.k = t.integers("k", tc.k);
    tc.multipliers = t.integers("multipliers", tc.multipliers);
    tc.R = t.integer("R", tc.R);
    tc.threshold = t.real("threshold", tc.threshold);
    tc.v_inf_iterations = t.integer("v_inf_iterations", tc.v_inf_iterations);
    tc.v_inf_burn_in = t.integer("v_inf_burn_in", tc.v_inf_burn_in);
    t.require(!tc.k.empty() && !tc.multipliers.empty(), "k and multipliers must be non-empty");
    for (auto k : tc.k) t.require(k >= 0, "k values must be nonnegative");
    for (auto mult : tc.multipliers) t.require(mult >= 1, "multipliers must be >= 1");
    t.require(tc.R >= 2, "R must be >= 2");
    t.require(tc.v_inf_iterations >= 100 && tc.v_inf_burn_in >= 0, "invalid V_inf run length");
    return tc;
  });
  c.require(cfg.sigma_q > 0.0, "sigma_q must be positive");
  c.require(cfg.init_sd > 0.0, "init_sd must be positive");
  c.require(cfg.k >= 0 && cfg.m >= cfg.k, "need 0 <= k <= m");
  c.require(cfg.R >= 2, "R must be >= 2");
  c.require(cfg.meeting_R >= 1, "meeting_R must be >= 1");
  c.require(cfg.max_iter > cfg.m, "max_iter must exceed m");
  c.require(!cfg.thresholds.empty(), "thresholds must be non-empty");
  c.require(cfg.hist_bins >= 1 && cfg.hist_hi > cfg.hist_lo, "invalid histogram range");
  return cfg;
}

struct ThresholdEstimate {
  double threshold = 0.0;
  double truth = 0.0;
  EstimateReport report;
};

struct TableCell {
  long long k = 0;
  long long m = 0;
  double cost = 0.0;
  double variance = 0.0;
  double inefficiency = 0.0;
  double relative_inefficiency = 0.0;  // inefficiency / V_inf
};

struct MixtureResult {
  MixtureConfig config;
  MeetingTimeSample meeting;
  TailFit tail;
  std::vector<ThresholdEstimate> estimates;
  std::vector<HistogramBin> histogram;
  std::vector<TableCell> table;
  BatchMeans v_inf;
};

inline RwmhKernel mixture_kernel(double sigma_q) {
  return RwmhKernel(models::BimodalMixture{}.target(), Matrix::Constant(1, 1, sigma_q * sigma_q));
}

/// Long single-chain run of 1(x > threshold) after burn-in, summarised by batch means.
inline BatchMeans mixture_v_inf(const RwmhKernel& kernel, double init_mean, double init_sd, double threshold,
                                long long iterations, long long burn_in, RngStream s) {
  Point x = Point::Constant(1, s.normal(init_mean, init_sd));
  for (long long t = 0; t < burn_in; ++t) x = kernel.single_step(x, s);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(iterations));
  for (long long t = 0; t < iterations; ++t) {
    x = kernel.single_step(x, s);
    vals.push_back(x(0) > threshold ? 1.0 : 0.0);
  }
  return batch_means(vals);
}

inline MixtureResult run_mixture(const MixtureConfig& cfg, const RunOptions& opt) {
  MixtureResult res;
  res.config = cfg;
  const StreamFactory root(opt.seed);
  const models::BimodalMixture target;
  const RwmhKernel kernel = mixture_kernel(cfg.sigma_q);
  const auto init = [&cfg](RngStream& s) { return Point::Constant(1, s.normal(cfg.init_mean, cfg.init_sd)); };

  res.meeting = sample_meeting_times(kernel, init, static_cast<std::size_t>(cfg.meeting_R),
                                     root.child(0, "mixture-meeting"), cfg.max_iter, opt.threads, cfg.regime);
  if (res.meeting.R() >= 100) res.tail = fit_geometric_tail(res.meeting);

  // One vector-valued test function: threshold indicators, then bin indicators.
  const auto breaks = linspace_breaks(cfg.hist_lo, cfg.hist_hi, static_cast<std::size_t>(cfg.hist_bins));
  const auto nthr = static_cast<Eigen::Index>(cfg.thresholds.size());
  const auto nbins = static_cast<Eigen::Index>(cfg.hist_bins);
  const auto h = [&](const Point& x) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(nthr + nbins);
    for (Eigen::Index i = 0; i < nthr; ++i) v(i) = x(0) > cfg.thresholds[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    if (x(0) >= breaks.front() && x(0) < breaks.back()) {
      const auto it = std::upper_bound(breaks.begin(), breaks.end(), x(0));
      v(nthr + static_cast<Eigen::Index>(it - breaks.begin()) - 1) = 1.0;
    }
    return v;
  };
  const StreamFactory est = root.child(0, "mixture-estimates");
  const auto reps = run_replicates(static_cast<std::size_t>(cfg.R), opt.threads, [&](std::size_t r) {
    RngStream s = est.derive(r, "replicate");
    return run_streaming(kernel, init, h, cfg.k, cfg.m, s, cfg.max_iter);
  });
  std::vector<Eigen::VectorXd> values;
  std::vector<double> costs;
  for (const auto& r : reps) {
    values.push_back(r.value);
    costs.push_back(r.cost());
  }
  const auto all = aggregate(std::span<const Eigen::VectorXd>(values), costs);
  for (Eigen::Index i = 0; i < nthr; ++i) {
    ThresholdEstimate te;
    te.threshold = cfg.thresholds[static_cast<std::size_t>(i)];
    te.truth = target.tail(te.threshold);
    te.report.R = all.R;
    te.report.z = all.z;
    te.report.mean_cost = all.mean_cost;
    te.report.mean = all.mean.segment(i, 1);
    te.report.sample_variance = all.sample_variance.segment(i, 1);
    te.report.ci_low = all.ci_low.segment(i, 1);
    te.report.ci_high = all.ci_high.segment(i, 1);
    te.report.inefficiency = all.inefficiency.segment(i, 1);
    res.estimates.push_back(std::move(te));
  }
  for (Eigen::Index j = 0; j < nbins; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    res.histogram.push_back({breaks[jj], breaks[jj + 1], all.mean(nthr + j), all.ci_low(nthr + j), all.ci_high(nthr + j)});
  }

  if (cfg.table.enabled) {
    const auto& tc = cfg.table;
    res.v_inf = mixture_v_inf(kernel, cfg.init_mean, cfg.init_sd, tc.threshold, tc.v_inf_iterations, tc.v_inf_burn_in,
                              root.derive(0, "mixture-vinf"));
    const auto hthr = [thr = tc.threshold](const Point& x) { return x(0) > thr ? 1.0 : 0.0; };
    std::uint64_t cell_id = 0;
    for (long long k : tc.k) {
      for (long long mult : tc.multipliers) {
        const long long m = std::max<long long>(k, mult * k);
        const StreamFactory cell = root.child(cell_id++, "mixture-table");
        const auto cell_reps = run_replicates(static_cast<std::size_t>(tc.R), opt.threads, [&](std::size_t r) {
          RngStream s = cell.derive(r, "replicate");
          return run_streaming(kernel, init, hthr, k, m, s, std::max(cfg.max_iter, m + 1));
        });
        std::vector<double> v, c;
        for (const auto& r : cell_reps) {
          v.push_back(r.value);
          c.push_back(r.cost());
        }
        const auto rep = aggregate(std::span<const double>(v), c);
        TableCell tcell{k, m, rep.mean_cost, rep.sample_variance(0), rep.inefficiency(0), 0.0};
        tcell.relative_inefficiency = tcell.inefficiency / res.v_inf.asymptotic_variance;
        res.table.push_back(tcell);
      }
    }
  }
  return res;
}

inline OutputSet mixture_outputs(const MixtureResult& res) {
  OutputSet out;
  const auto& cfg = res.config;
  io::CsvWriter est({"regime", "threshold", "k", "m", "R", "estimate", "ci_low", "ci_high", "truth", "mean_cost",
                     "variance", "inefficiency"});
  for (const auto& e : res.estimates) {
    est.add(cfg.regime, e.threshold, cfg.k, cfg.m, static_cast<long long>(e.report.R), e.report.mean(0),
            e.report.ci_low(0), e.report.ci_high(0), e.truth, e.report.mean_cost, e.report.sample_variance(0),
            e.report.inefficiency(0));
  }
  out.add("estimates.csv", est.str());
  io::CsvWriter hist({"regime", "lower", "upper", "estimate", "ci_low", "ci_high", "density_estimate"});
  for (const auto& b : res.histogram) {
    hist.add(cfg.regime, b.lower, b.upper, b.estimate, b.ci_low, b.ci_high, b.estimate / (b.upper - b.lower));
  }
  out.add("histogram.csv", hist.str());
  io::CsvWriter taus({"regime", "replicate", "tau"});
  std::size_t j = 0;
  for (std::size_t r = 0; r < res.meeting.taus.size() + res.meeting.timed_out.size(); ++r) {
    if (std::find(res.meeting.timed_out.begin(), res.meeting.timed_out.end(), r) != res.meeting.timed_out.end()) {
      taus.add(cfg.regime, static_cast<long long>(r), "NA");
    } else {
      taus.add(cfg.regime, static_cast<long long>(r), res.meeting.taus[j++]);
    }
  }
  out.add("meetingtimes.csv", taus.str());
  if (!res.table.empty()) {
    io::CsvWriter t({"k", "m", "cost", "variance", "inefficiency", "v_inf", "inefficiency_over_v_inf"});
    for (const auto& c : res.table) {
      t.add(c.k, c.m, c.cost, c.variance, c.inefficiency, res.v_inf.asymptotic_variance, c.relative_inefficiency);
    }
    out.add("table.csv", t.str());
  }
  json& s = out.summary;
  if (res.meeting.R() > 0) {
    s["mean_tau"] = res.meeting.mean();
    s["tau_q99"] = res.meeting.quantile(0.99);
    s["max_tau"] = res.meeting.max();
  }
  s["meeting_timeouts"] = res.meeting.timed_out.size();
  if (!res.tail.degenerate && res.meeting.R() >= 100) {
    s["tail_rate"] = res.tail.rate;
    s["tail_r_squared"] = res.tail.r_squared;
  }
  json e = json::array();
  for (const auto& x : res.estimates) {
    e.push_back({{"threshold", x.threshold},
                 {"estimate", x.report.mean(0)},
                 {"ci", {x.report.ci_low(0), x.report.ci_high(0)}},
                 {"truth", x.truth},
                 {"covers_truth", x.report.ci_low(0) <= x.truth && x.truth <= x.report.ci_high(0)}});
  }
  s["estimates"] = e;
  if (!res.table.empty()) s["v_inf"] = res.v_inf.asymptotic_variance;
  return out;
}

}  // namespace umcmc::experiments
