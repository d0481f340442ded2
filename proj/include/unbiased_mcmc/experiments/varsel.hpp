#pragma once

// Bayesian variable selection on synthetic data: meeting times across a grid
// of p, and inclusion-probability estimates for one problem size.
//
// Outputs: meetingtimes.csv, deciles.csv and, when the estimate section is
// enabled, inclusion.csv (with exact enumeration for p <= 16).

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "unbiased_mcmc/aggregate.hpp"
#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/estimator.hpp"
#include "unbiased_mcmc/experiments/common.hpp"
#include "unbiased_mcmc/kernels/varsel.hpp"
#include "unbiased_mcmc/models/varsel_data.hpp"

namespace umcmc::experiments {

inline constexpr std::size_t kVarSelMaxEnumerate = 16;

struct VarSelProblem {
  long long p = 0;
  long long n = 500;
  long long s0 = 100;
};

struct VarSelEstimateConfig {
  bool enabled = true;
  VarSelProblem problem{500, 500, 100};
  long long k = 25000;
  long long m = 50000;
  long long R = 100;
  long long report = 20;
};

struct VarSelConfig {
  std::vector<long long> p_grid{100, 250, 500};
  long long n = 500;
  long long s0 = 100;
  double snr = 1.0;
  double sigma0_sq = 1.0;
  double kappa = 0.1;
  double g_exponent = 3.0;  // g = p^g_exponent
  std::uint64_t data_seed = 0;
  long long meeting_R = 100;
  long long max_iter = kDefaultMaxIter;
  VarSelEstimateConfig estimate;
};

inline VarSelConfig parse_varsel_config(ConfigObject& c, const RunOptions& opt) {
  VarSelConfig cfg;
  cfg.p_grid = c.integers("p_grid", cfg.p_grid);
  cfg.n = c.integer("n", cfg.n);
  cfg.s0 = c.integer("s0", cfg.s0);
  cfg.snr = c.real("snr", cfg.snr);
  cfg.sigma0_sq = c.real("sigma0_sq", cfg.sigma0_sq);
  cfg.kappa = c.real("kappa", cfg.kappa);
  cfg.g_exponent = c.real("g_exponent", cfg.g_exponent);
  cfg.data_seed = static_cast<std::uint64_t>(c.integer("data_seed", static_cast<long long>(opt.seed)));
  cfg.meeting_R = c.replicates("meeting_R", cfg.meeting_R, opt);
  cfg.max_iter = c.integer("max_iter", cfg.max_iter);
  cfg.estimate = c.nested("estimate", [&](ConfigObject& e) {
    VarSelEstimateConfig ec;
    ec.enabled = e.boolean("enabled", ec.enabled);
    ec.problem.p = e.integer("p", ec.problem.p);
    ec.problem.n = e.integer("n", cfg.n);
    ec.problem.s0 = e.integer("s0", std::min(cfg.s0, ec.problem.p));
    ec.k = e.integer("k", ec.k);
    ec.m = e.integer("m", ec.m);
    ec.R = e.integer("R", ec.R);
    ec.report = e.integer("report", ec.report);
    e.require(ec.problem.p >= 10 && ec.problem.n >= 1, "need p >= 10 and n >= 1");
    e.require(ec.problem.s0 >= 0 && ec.problem.s0 <= ec.problem.p, "need 0 <= s0 <= p");
    e.require(ec.k >= 0 && ec.m >= ec.k, "need 0 <= k <= m");
    e.require(ec.R >= 2, "R must be >= 2");
    e.require(ec.report >= 1 && ec.report <= ec.problem.p, "report must lie in [1, p]");
    return ec;
  });
  for (auto p : cfg.p_grid) {
    c.require(p >= 10, "every p in p_grid must be >= 10");
    c.require(cfg.s0 <= p, "s0 must not exceed any p in p_grid");
  }
  c.require(cfg.n >= 1 && cfg.s0 >= 0, "need n >= 1 and s0 >= 0");
  c.require(cfg.snr >= 0.0 && cfg.sigma0_sq > 0.0, "need snr >= 0 and sigma0_sq > 0");
  c.require(cfg.meeting_R >= 1, "meeting_R must be >= 1");
  c.require(cfg.max_iter > std::max<long long>(1, cfg.estimate.m), "max_iter must exceed m");
  return cfg;
}

inline std::shared_ptr<const VarSelModel> make_varsel_model(const VarSelConfig& cfg, const VarSelProblem& prob,
                                                            models::VarSelData* data_out = nullptr) {
  auto data = models::generate_varsel_data(static_cast<std::size_t>(prob.p), static_cast<std::size_t>(prob.n),
                                           cfg.snr, cfg.sigma0_sq, cfg.data_seed);
  const double g = std::pow(static_cast<double>(prob.p), cfg.g_exponent);
  auto model = std::make_shared<const VarSelModel>(data.X, data.Y, g, cfg.kappa, static_cast<std::size_t>(prob.s0));
  if (data_out) *data_out = std::move(data);
  return model;
}

/// Posterior inclusion probabilities by summing over all 2^p models.
inline Eigen::VectorXd varsel_exact_inclusion(const VarSelModel& model) {
  const std::size_t p = model.p();
  if (p > kVarSelMaxEnumerate) throw ContractError("exact enumeration is limited to p <= 16");
  std::vector<double> logw;
  std::vector<std::uint32_t> codes;
  for (std::uint32_t code = 0; code < (1u << p); ++code) {
    std::vector<std::uint8_t> g(p);
    for (std::size_t j = 0; j < p; ++j) g[j] = (code >> j) & 1u;
    const double lp = model.log_posterior(g);
    if (std::isfinite(lp)) {
      logw.push_back(lp);
      codes.push_back(code);
    }
  }
  const double hi = *std::max_element(logw.begin(), logw.end());
  Eigen::VectorXd incl = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  double z = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double w = std::exp(logw[i] - hi);
    z += w;
    for (std::size_t j = 0; j < p; ++j) {
      if ((codes[i] >> j) & 1u) incl(static_cast<Eigen::Index>(j)) += w;
    }
  }
  return incl / z;
}

struct VarSelMeeting {
  long long p = 0;
  MeetingTimeSample sample;
  std::vector<double> deciles;  // of tau / p, levels 0.1..0.9
  double median_ratio = 0.0;
};

struct VarSelResult {
  VarSelConfig config;
  std::vector<VarSelMeeting> meeting;
  bool has_estimate = false;
  EstimateReport inclusion;
  std::optional<Eigen::VectorXd> exact;
  Point beta_star;
};

/// Type-1 empirical quantile of real values.
inline double type1_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()) - 1e-12));
  idx = std::clamp<std::size_t>(idx, 1, v.size());
  return v[idx - 1];
}

inline VarSelResult run_varsel(const VarSelConfig& cfg, const RunOptions& opt) {
  VarSelResult res;
  res.config = cfg;
  const StreamFactory root(opt.seed);
  std::uint64_t cell = 0;
  for (long long p : cfg.p_grid) {
    const auto model = make_varsel_model(cfg, {p, cfg.n, cfg.s0});
    const VarSelKernel kernel(model);
    const auto init = [&kernel](RngStream& s) { return kernel.sample_initial(s); };
    VarSelMeeting vm;
    vm.p = p;
    vm.sample = sample_meeting_times(kernel, init, static_cast<std::size_t>(cfg.meeting_R),
                                     root.child(cell++, "varsel-meeting"), cfg.max_iter, opt.threads,
                                     "p=" + std::to_string(p));
    if (vm.sample.R() > 0) {
      std::vector<double> ratios;
      for (auto t : vm.sample.taus) ratios.push_back(static_cast<double>(t) / static_cast<double>(p));
      for (int d = 1; d <= 9; ++d) vm.deciles.push_back(type1_quantile(ratios, d / 10.0));
      vm.median_ratio = type1_quantile(ratios, 0.5);
    }
    res.meeting.push_back(std::move(vm));
  }
  if (cfg.estimate.enabled) {
    const auto& ec = cfg.estimate;
    models::VarSelData data;
    const auto model = make_varsel_model(cfg, ec.problem, &data);
    res.beta_star = data.beta_star;
    const VarSelKernel kernel(model);
    const auto init = [&kernel](RngStream& s) { return kernel.sample_initial(s); };
    const auto h = [](const VarSelState& st) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(st.gamma.size()));
      for (std::size_t j = 0; j < st.gamma.size(); ++j) v(static_cast<Eigen::Index>(j)) = st.gamma[j];
      return v;
    };
    const StreamFactory est = root.child(0, "varsel-estimates");
    const auto reps = run_replicates(static_cast<std::size_t>(ec.R), opt.threads, [&](std::size_t r) {
      RngStream s = est.derive(r, "replicate");
      return run_streaming(kernel, init, h, ec.k, ec.m, s, cfg.max_iter);
    });
    std::vector<Eigen::VectorXd> values;
    std::vector<double> costs;
    for (const auto& r : reps) {
      values.push_back(r.value);
      costs.push_back(r.cost());
    }
    res.inclusion = aggregate(std::span<const Eigen::VectorXd>(values), costs);
    res.has_estimate = true;
    if (model->p() <= kVarSelMaxEnumerate) res.exact = varsel_exact_inclusion(*model);
  }
  return res;
}

inline OutputSet varsel_outputs(const VarSelResult& res) {
  OutputSet out;
  io::CsvWriter taus({"p", "replicate", "tau", "tau_over_p"});
  io::CsvWriter dec({"p", "level", "tau_over_p"});
  json meet = json::array();
  for (const auto& vm : res.meeting) {
    std::size_t j = 0;
    const auto& s = vm.sample;
    for (std::size_t r = 0; r < s.taus.size() + s.timed_out.size(); ++r) {
      if (std::find(s.timed_out.begin(), s.timed_out.end(), r) != s.timed_out.end()) {
        taus.add(vm.p, static_cast<long long>(r), "NA", "NA");
      } else {
        const auto t = s.taus[j++];
        taus.add(vm.p, static_cast<long long>(r), t, static_cast<double>(t) / static_cast<double>(vm.p));
      }
    }
    for (std::size_t d = 0; d < vm.deciles.size(); ++d) dec.add(vm.p, (d + 1) / 10.0, vm.deciles[d]);
    meet.push_back({{"p", vm.p}, {"median_tau_over_p", vm.median_ratio}, {"timeouts", s.timed_out.size()}});
  }
  out.add("meetingtimes.csv", taus.str());
  out.add("deciles.csv", dec.str());
  out.summary["meeting"] = meet;
  if (res.has_estimate) {
    const auto& e = res.inclusion;
    io::CsvWriter inc({"variable", "estimate", "ci_low", "ci_high", "standard_error", "exact", "beta_star"});
    double max_other = 0.0;
    for (Eigen::Index i = 0; i < e.mean.size(); ++i) {
      if (i >= res.config.estimate.report) max_other = std::max(max_other, std::abs(e.mean(i)));
    }
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(e.mean.size(), res.config.estimate.report); ++i) {
      inc.add(static_cast<long long>(i + 1), e.mean(i), e.ci_low(i), e.ci_high(i), e.standard_error(i),
              res.exact ? io::format_double((*res.exact)(i)) : std::string("NA"), res.beta_star(i));
    }
    out.add("inclusion.csv", inc.str());
    out.summary["estimate_mean_cost"] = e.mean_cost;
    out.summary["max_abs_inclusion_beyond_report"] = max_other;
  }
  return out;
}

}  // namespace umcmc::experiments
