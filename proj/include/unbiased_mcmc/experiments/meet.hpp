#pragma once

// Meeting-time diagnostics for one of the example kernels: the (k, m)
// heuristic, the total variation bound against k, and the survival curve.
//
// Outputs: taus.csv, km.json, tv_bound.csv, survival.csv.

#include <string>
#include <vector>

#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/experiments/common.hpp"
#include "unbiased_mcmc/experiments/cut.hpp"
#include "unbiased_mcmc/experiments/mixture.hpp"
#include "unbiased_mcmc/experiments/pump.hpp"
#include "unbiased_mcmc/experiments/varsel.hpp"

namespace umcmc::experiments {

struct MeetMixture {
  double sigma_q = 3.0;
  double init_mean = 10.0;
  double init_sd = 10.0;
};

struct MeetCut {
  std::string hpv = default_data_file("hpv.csv");
  std::string cancer = default_data_file("cancer.csv");
  bool raw_pyears = false;
  std::vector<double> init_mean{0.0, 0.0};
  std::vector<double> init_cov{1.0, 0.0, 1.0};  // (1,1), (1,2), (2,2)
  std::vector<double> proposal_cov{1.0, 0.0, 1.0};
};

struct MeetConfig {
  std::string kernel = "mixture";
  long long R = 1000;
  long long max_iter = kDefaultMaxIter;
  double quantile = 0.99;
  long long multiplier = 10;
  long long tv_max_k = 0;  // 0: up to one past the largest observed tau
  MeetMixture mixture;
  std::string pump_data = default_data_file("pump.csv");
  PumpHyper pump_hyper;
  VarSelConfig varsel;  // uses p_grid.front(), n, s0 and the data settings
  MeetCut cut;
};

inline Matrix sym2(const std::vector<double>& v) {
  Matrix m(2, 2);
  m << v[0], v[1], v[1], v[2];
  return m;
}

inline MeetConfig parse_meet_config(ConfigObject& c, const RunOptions& opt) {
  MeetConfig cfg;
  cfg.kernel = c.string("kernel", cfg.kernel);
  if (opt.kernel) cfg.kernel = *opt.kernel;
  c.require(cfg.kernel == "mixture" || cfg.kernel == "pump" || cfg.kernel == "varsel" || cfg.kernel == "cut",
            "kernel must be one of mixture, pump, varsel, cut (got '" + cfg.kernel + "')");
  cfg.R = c.replicates("R", cfg.R, opt);
  cfg.max_iter = c.integer("max_iter", cfg.max_iter);
  cfg.quantile = c.real("quantile", cfg.quantile);
  cfg.multiplier = c.integer("multiplier", cfg.multiplier);
  cfg.tv_max_k = c.integer("tv_max_k", cfg.tv_max_k);
  c.require(cfg.R >= 1, "R must be >= 1");
  c.require(cfg.max_iter > 1, "max_iter must exceed 1");
  c.require(cfg.quantile > 0 && cfg.quantile <= 1, "quantile must lie in (0, 1]");
  c.require(cfg.multiplier >= 1 && cfg.tv_max_k >= 0, "need multiplier >= 1 and tv_max_k >= 0");
  // Only the section of the selected kernel is read; the others must be absent.
  for (const std::string other : {"mixture", "pump", "varsel", "cut"}) {
    if (other != cfg.kernel && c.has(other)) c.fail("section '" + other + "' given but kernel is " + cfg.kernel);
  }
  if (cfg.kernel == "mixture") {
    cfg.mixture = c.nested("mixture", [](ConfigObject& m) {
      MeetMixture x;
      x.sigma_q = m.real("sigma_q", x.sigma_q);
      x.init_mean = m.real("init_mean", x.init_mean);
      x.init_sd = m.real("init_sd", x.init_sd);
      m.require(x.sigma_q > 0 && x.init_sd > 0, "need sigma_q > 0 and init_sd > 0");
      return x;
    });
  } else if (cfg.kernel == "pump") {
    c.nested("pump", [&](ConfigObject& p) {
      cfg.pump_data = p.has("data") ? resolve_data_path(opt, p.string("data")).string() : p.string("data", cfg.pump_data);
      cfg.pump_hyper.alpha = p.real("alpha", cfg.pump_hyper.alpha);
      cfg.pump_hyper.gamma = p.real("gamma", cfg.pump_hyper.gamma);
      cfg.pump_hyper.delta = p.real("delta", cfg.pump_hyper.delta);
      p.require(cfg.pump_hyper.alpha > 0 && cfg.pump_hyper.gamma > 0 && cfg.pump_hyper.delta > 0,
                "hyperparameters must be positive");
      return 0;
    });
  } else if (cfg.kernel == "varsel") {
    c.nested("varsel", [&](ConfigObject& v) {
      const long long p = v.integer("p", 100);
      cfg.varsel.p_grid = {p};
      cfg.varsel.n = v.integer("n", cfg.varsel.n);
      cfg.varsel.s0 = v.integer("s0", std::min(cfg.varsel.s0, p));
      cfg.varsel.snr = v.real("snr", cfg.varsel.snr);
      cfg.varsel.sigma0_sq = v.real("sigma0_sq", cfg.varsel.sigma0_sq);
      cfg.varsel.kappa = v.real("kappa", cfg.varsel.kappa);
      cfg.varsel.g_exponent = v.real("g_exponent", cfg.varsel.g_exponent);
      cfg.varsel.data_seed = static_cast<std::uint64_t>(v.integer("data_seed", static_cast<long long>(opt.seed)));
      v.require(p >= 10 && cfg.varsel.n >= 1, "need p >= 10 and n >= 1");
      v.require(cfg.varsel.s0 >= 0 && cfg.varsel.s0 <= p, "need 0 <= s0 <= p");
      v.require(cfg.varsel.snr >= 0 && cfg.varsel.sigma0_sq > 0, "need snr >= 0 and sigma0_sq > 0");
      return 0;
    });
  } else {
    cfg.cut = c.nested("cut", [&](ConfigObject& k) {
      MeetCut x;
      x.hpv = k.has("hpv") ? resolve_data_path(opt, k.string("hpv")).string() : k.string("hpv", x.hpv);
      x.cancer = k.has("cancer") ? resolve_data_path(opt, k.string("cancer")).string() : k.string("cancer", x.cancer);
      x.raw_pyears = k.boolean("raw_pyears", x.raw_pyears);
      x.init_mean = k.reals("init_mean", x.init_mean);
      x.init_cov = k.reals("init_cov", x.init_cov);
      x.proposal_cov = k.reals("proposal_cov", x.proposal_cov);
      k.require(x.init_mean.size() == 2, "init_mean must have 2 entries");
      k.require(x.init_cov.size() == 3 && x.proposal_cov.size() == 3,
                "covariances are given as [v11, v12, v22]");
      return x;
    });
  }
  return cfg;
}

struct MeetResult {
  MeetConfig config;
  std::map<std::string, std::string> checksums;
  MeetingTimeSample sample;
  KmChoice km;
  std::vector<TvPoint> tv;
  std::vector<SurvivalPoint> survival;
};

inline MeetResult run_meet(const MeetConfig& cfg, const RunOptions& opt) {
  MeetResult res;
  res.config = cfg;
  const StreamFactory f = StreamFactory(opt.seed).child(0, "meet-" + cfg.kernel);
  const auto R = static_cast<std::size_t>(cfg.R);
  if (cfg.kernel == "mixture") {
    const auto kernel = mixture_kernel(cfg.mixture.sigma_q);
    const auto init = [&](RngStream& s) { return Point::Constant(1, s.normal(cfg.mixture.init_mean, cfg.mixture.init_sd)); };
    res.sample = sample_meeting_times(kernel, init, R, f, cfg.max_iter, opt.threads, "mixture");
  } else if (cfg.kernel == "pump") {
    res.checksums["pump"] = io::file_checksum(cfg.pump_data);
    const PumpGibbsKernel kernel(io::load_pump_data(cfg.pump_data), cfg.pump_hyper);
    res.sample = sample_meeting_times(kernel, pump_init, R, f, cfg.max_iter, opt.threads, "pump");
  } else if (cfg.kernel == "varsel") {
    const auto& v = cfg.varsel;
    const auto model = make_varsel_model(v, {v.p_grid.front(), v.n, v.s0});
    const VarSelKernel kernel(model);
    const auto init = [&kernel](RngStream& s) { return kernel.sample_initial(s); };
    res.sample = sample_meeting_times(kernel, init, R, f, cfg.max_iter, opt.threads, "varsel");
  } else {
    const auto& k = cfg.cut;
    res.checksums["hpv"] = io::file_checksum(k.hpv);
    res.checksums["cancer"] = io::file_checksum(k.cancer);
    const models::CutModel model(io::load_hpv_data(k.hpv), io::load_cancer_data(k.cancer, k.raw_pyears));
    const CutStage2Settings st{Eigen::Map<const Point>(k.init_mean.data(), 2), sym2(k.init_cov), sym2(k.proposal_cov)};
    res.sample.taus = cut_meeting_times(model, st, R, f, cfg.max_iter, opt.threads);
    res.sample.label = "cut";
  }
  if (res.sample.R() == 0) throw TimeoutError("every replicate hit max_iter; no meeting times to report", cfg.max_iter);
  res.km = choose_k_m(res.sample, cfg.quantile, cfg.multiplier);
  const long long kmax = cfg.tv_max_k > 0 ? cfg.tv_max_k : res.sample.max() + 1;
  std::vector<long long> grid;
  for (long long k = 0; k <= kmax; ++k) grid.push_back(k);
  res.tv = tv_upper_bound(res.sample, grid);
  res.survival = survival_curve(res.sample);
  return res;
}

inline OutputSet meet_outputs(const MeetResult& res) {
  OutputSet out;
  out.data_checksums = res.checksums;
  const auto& s = res.sample;
  io::CsvWriter taus({"replicate", "tau"});
  std::size_t j = 0;
  for (std::size_t r = 0; r < s.taus.size() + s.timed_out.size(); ++r) {
    if (std::find(s.timed_out.begin(), s.timed_out.end(), r) != s.timed_out.end()) {
      taus.add(static_cast<long long>(r), "NA");
    } else {
      taus.add(static_cast<long long>(r), s.taus[j++]);
    }
  }
  out.add("taus.csv", taus.str());
  const json km = {{"kernel", res.config.kernel},
                   {"quantile", res.config.quantile},
                   {"multiplier", res.config.multiplier},
                   {"k", res.km.k},
                   {"m", res.km.m}};
  out.add("km.json", km.dump(2) + "\n");
  io::CsvWriter tv({"k", "tv_bound"});
  for (const auto& p : res.tv) tv.add(p.k, p.bound);
  out.add("tv_bound.csv", tv.str());
  io::CsvWriter sv({"t", "survival"});
  for (const auto& p : res.survival) sv.add(p.t, p.survival);
  out.add("survival.csv", sv.str());
  out.summary["kernel"] = res.config.kernel;
  out.summary["mean_tau"] = s.mean();
  out.summary["max_tau"] = s.max();
  out.summary["timeouts"] = s.timed_out.size();
  out.summary["k"] = res.km.k;
  out.summary["m"] = res.km.m;
  return out;
}

}  // namespace umcmc::experiments
