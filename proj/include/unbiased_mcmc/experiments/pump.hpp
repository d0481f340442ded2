#pragma once

// Pump-failure Gibbs sampler. Both chains start with every parameter at 1.
//
// Outputs: meetingtimes.csv, estimates.csv (posterior means at the chosen
// (k, m)), efficiency_k.csv (H_k efficiency vs k) and efficiency_m.csv
// (H_{k:m} efficiency vs m at a fixed k).

#include <string>
#include <vector>

#include "unbiased_mcmc/aggregate.hpp"
#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/estimator.hpp"
#include "unbiased_mcmc/experiments/common.hpp"
#include "unbiased_mcmc/io.hpp"
#include "unbiased_mcmc/kernels/pump.hpp"

namespace umcmc::experiments {

struct PumpConfig {
  std::string data = default_data_file("pump.csv");
  PumpHyper hyper;
  long long meeting_R = 1000;
  double quantile = 0.99;
  long long multiplier = 10;
  /// 0 means: take k from the meeting-time quantile and m = multiplier * k.
  long long k = 0;
  long long m = 0;
  long long R = 10000;
  std::vector<long long> efficiency_k{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15};
  long long efficiency_m_k = 4;
  std::vector<long long> efficiency_m{4, 8, 12, 16, 20, 30, 40, 60, 80, 100};
  long long efficiency_R = 2000;
  long long max_iter = kDefaultMaxIter;
};

inline PumpConfig parse_pump_config(ConfigObject& c, const RunOptions& opt) {
  PumpConfig cfg;
  cfg.data = c.has("data") ? resolve_data_path(opt, c.string("data")).string() : c.string("data", cfg.data);
  cfg.hyper = c.nested("hyper", [](ConfigObject& h) {
    PumpHyper p;
    p.alpha = h.real("alpha", p.alpha);
    p.gamma = h.real("gamma", p.gamma);
    p.delta = h.real("delta", p.delta);
    h.require(p.alpha > 0 && p.gamma > 0 && p.delta > 0, "hyperparameters must be positive");
    return p;
  });
  cfg.meeting_R = c.integer("meeting_R", cfg.meeting_R);
  cfg.quantile = c.real("quantile", cfg.quantile);
  cfg.multiplier = c.integer("multiplier", cfg.multiplier);
  cfg.k = c.integer("k", cfg.k);
  cfg.m = c.integer("m", cfg.m);
  cfg.R = c.replicates("R", cfg.R, opt);
  cfg.efficiency_k = c.integers("efficiency_k", cfg.efficiency_k);
  cfg.efficiency_m_k = c.integer("efficiency_m_k", cfg.efficiency_m_k);
  cfg.efficiency_m = c.integers("efficiency_m", cfg.efficiency_m);
  cfg.efficiency_R = c.integer("efficiency_R", cfg.efficiency_R);
  cfg.max_iter = c.integer("max_iter", cfg.max_iter);
  c.require(cfg.meeting_R >= 1, "meeting_R must be >= 1");
  c.require(cfg.quantile > 0.0 && cfg.quantile <= 1.0, "quantile must lie in (0, 1]");
  c.require(cfg.multiplier >= 1, "multiplier must be >= 1");
  c.require(cfg.k >= 0 && (cfg.k == 0 || cfg.m >= cfg.k), "need m >= k when k is given");
  c.require(cfg.R >= 2 && cfg.efficiency_R >= 2, "replicate counts must be >= 2");
  for (auto k : cfg.efficiency_k) c.require(k >= 0, "efficiency_k values must be nonnegative");
  for (auto m : cfg.efficiency_m) c.require(m >= cfg.efficiency_m_k, "efficiency_m values must be >= efficiency_m_k");
  c.require(cfg.max_iter > 1, "max_iter must exceed 1");
  return cfg;
}

struct EfficiencyPoint {
  long long k = 0;
  long long m = 0;
  double expected_cost = 0.0;
  double variance = 0.0;
  double efficiency = 0.0;
};

struct PumpResult {
  PumpConfig config;
  std::string data_checksum;
  MeetingTimeSample meeting;
  KmChoice km;
  EstimateReport estimate;  // lambda_1..lambda_10, beta
  std::vector<EfficiencyPoint> efficiency_k;
  std::vector<EfficiencyPoint> efficiency_m;
};

inline Point pump_init(RngStream&) { return Point::Ones(PumpGibbsKernel::K + 1); }

inline PumpResult run_pump(const PumpConfig& cfg, const RunOptions& opt) {
  PumpResult res;
  res.config = cfg;
  res.data_checksum = io::file_checksum(cfg.data);
  const PumpGibbsKernel kernel(io::load_pump_data(cfg.data), cfg.hyper);
  const StreamFactory root(opt.seed);
  const auto mi = std::max(cfg.max_iter, 2LL);

  res.meeting = sample_meeting_times(kernel, pump_init, static_cast<std::size_t>(cfg.meeting_R),
                                     root.child(0, "pump-meeting"), mi, opt.threads, "pump");
  if (cfg.k > 0) {
    res.km = {cfg.k, cfg.m};
  } else {
    res.km = choose_k_m(res.meeting, cfg.quantile, cfg.multiplier);
  }

  const auto identity = [](const Point& x) -> Eigen::VectorXd { return x; };
  const StreamFactory est = root.child(0, "pump-estimates");
  const auto reps = run_replicates(static_cast<std::size_t>(cfg.R), opt.threads, [&](std::size_t r) {
    RngStream s = est.derive(r, "replicate");
    return run_streaming(kernel, pump_init, identity, res.km.k, res.km.m, s, std::max(mi, res.km.m + 1));
  });
  std::vector<Eigen::VectorXd> values;
  std::vector<double> costs;
  for (const auto& r : reps) {
    values.push_back(r.value);
    costs.push_back(r.cost());
  }
  res.estimate = aggregate(std::span<const Eigen::VectorXd>(values), costs);

  // H_k for every k of the grid from shared runs stored up to max(k_grid).
  const auto beta = [](const Point& x) { return x(PumpGibbsKernel::K); };
  if (!cfg.efficiency_k.empty()) {
    const long long kmax = *std::max_element(cfg.efficiency_k.begin(), cfg.efficiency_k.end());
    const StreamFactory ek = root.child(0, "pump-efficiency-k");
    const auto runs = run_replicates(static_cast<std::size_t>(cfg.efficiency_R), opt.threads, [&](std::size_t r) {
      RngStream s = ek.derive(r, "replicate");
      const auto run = run_coupled(kernel, pump_init, 0, kmax, s, std::max(mi, kmax + 1));
      std::vector<double> hk;
      for (long long k : cfg.efficiency_k) hk.push_back(h_k(run, beta, k));
      return std::make_pair(run.tau, hk);
    });
    for (std::size_t j = 0; j < cfg.efficiency_k.size(); ++j) {
      const long long k = cfg.efficiency_k[j];
      std::vector<double> v, c;
      for (const auto& [tau, hk] : runs) {
        v.push_back(hk[j]);
        c.push_back(static_cast<double>(std::max(k, tau)));
      }
      const auto rep = aggregate(std::span<const double>(v), c);
      res.efficiency_k.push_back({k, k, rep.mean_cost, rep.sample_variance(0), 1.0 / rep.inefficiency(0)});
    }
  }
  const StreamFactory em = root.child(0, "pump-efficiency-m");
  std::uint64_t cell = 0;
  for (long long m : cfg.efficiency_m) {
    const StreamFactory f = em.child(cell++, "m");
    const auto r2 = run_replicates(static_cast<std::size_t>(cfg.efficiency_R), opt.threads, [&](std::size_t r) {
      RngStream s = f.derive(r, "replicate");
      return run_streaming(kernel, pump_init, beta, cfg.efficiency_m_k, m, s, std::max(mi, m + 1));
    });
    std::vector<double> v, c;
    for (const auto& x : r2) {
      v.push_back(x.value);
      c.push_back(x.cost());
    }
    const auto rep = aggregate(std::span<const double>(v), c);
    res.efficiency_m.push_back({cfg.efficiency_m_k, m, rep.mean_cost, rep.sample_variance(0), 1.0 / rep.inefficiency(0)});
  }
  return res;
}

inline OutputSet pump_outputs(const PumpResult& res) {
  OutputSet out;
  out.data_checksums["pump"] = res.data_checksum;
  io::CsvWriter taus({"replicate", "tau"});
  std::size_t j = 0;
  const std::size_t total = res.meeting.taus.size() + res.meeting.timed_out.size();
  for (std::size_t r = 0; r < total; ++r) {
    if (std::find(res.meeting.timed_out.begin(), res.meeting.timed_out.end(), r) != res.meeting.timed_out.end()) {
      taus.add(static_cast<long long>(r), "NA");
    } else {
      taus.add(static_cast<long long>(r), res.meeting.taus[j++]);
    }
  }
  out.add("meetingtimes.csv", taus.str());
  io::CsvWriter est({"parameter", "k", "m", "R", "estimate", "ci_low", "ci_high", "variance", "mean_cost",
                     "inefficiency"});
  const auto& e = res.estimate;
  for (Eigen::Index i = 0; i < e.mean.size(); ++i) {
    const std::string name = i < PumpGibbsKernel::K ? "lambda_" + std::to_string(i + 1) : "beta";
    est.add(name, res.km.k, res.km.m, static_cast<long long>(e.R), e.mean(i), e.ci_low(i), e.ci_high(i),
            e.sample_variance(i), e.mean_cost, e.inefficiency(i));
  }
  out.add("estimates.csv", est.str());
  io::CsvWriter ek({"k", "expected_max_k_tau", "variance", "efficiency"});
  for (const auto& p : res.efficiency_k) ek.add(p.k, p.expected_cost, p.variance, p.efficiency);
  out.add("efficiency_k.csv", ek.str());
  io::CsvWriter em({"k", "m", "expected_cost", "variance", "efficiency"});
  for (const auto& p : res.efficiency_m) em.add(p.k, p.m, p.expected_cost, p.variance, p.efficiency);
  out.add("efficiency_m.csv", em.str());
  json& s = out.summary;
  if (res.meeting.R() > 0) {
    s["mean_tau"] = res.meeting.mean();
    s["tau_quantile"] = res.meeting.quantile(res.config.quantile);
  }
  s["meeting_timeouts"] = res.meeting.timed_out.size();
  s["k"] = res.km.k;
  s["m"] = res.km.m;
  const auto b = PumpGibbsKernel::K;
  s["beta_mean"] = e.mean(b);
  s["beta_ci"] = {e.ci_low(b), e.ci_high(b)};
  return out;
}

}  // namespace umcmc::experiments
