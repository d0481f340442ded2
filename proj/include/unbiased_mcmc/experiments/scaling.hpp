#pragma once

// Meeting times against dimension on N(0, V) with V_ij = rho^|i-j|, for joint
// RWMH (proposal covariance V/d or V), MH-within-Gibbs and the HMC/RWMH
// mixture. Both chains start from exact target draws.
//
// Outputs: meeting.csv (one row per algorithm and dimension) and taus.csv.

#include <cmath>
#include <string>
#include <vector>

#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/experiments/common.hpp"
#include "unbiased_mcmc/kernels/gibbs.hpp"
#include "unbiased_mcmc/kernels/hmc.hpp"
#include "unbiased_mcmc/kernels/rwmh.hpp"
#include "unbiased_mcmc/models/gaussian.hpp"

namespace umcmc::experiments {

struct ScalingAlgorithm {
  std::string name;
  std::string kind;  // rwmh, gibbs or hmc
  std::vector<long long> dims;
  // rwmh
  bool proposal_over_d = false;  // true: V/d, false: V
  // gibbs
  double sd = 1.0;
  long long steps = 1;
  // hmc
  double trajectory = 1.0;
  long long leapfrog_steps = 20;
  double mh_variance = 1e-5;
  double hmc_prob = 0.9;
};

struct ScalingConfig {
  double rho = 0.5;
  long long R = 100;
  long long max_iter = 1000000;
  std::vector<ScalingAlgorithm> algorithms;
};

inline json default_scaling_algorithms() {
  return json::parse(R"([
    {"name": "rwmh-1", "kind": "rwmh", "proposal": "V/d", "dims": [1, 2, 4, 6, 8, 10]},
    {"name": "rwmh-2", "kind": "rwmh", "proposal": "V", "dims": [1, 2, 4, 6, 8, 10]},
    {"name": "gibbs-1", "kind": "gibbs", "steps": 1, "dims": [1, 2, 4, 6, 8, 10, 20, 50, 100]},
    {"name": "gibbs-2", "kind": "gibbs", "steps": 2, "dims": [1, 2, 4, 6, 8, 10, 20, 50, 100]},
    {"name": "gibbs-5", "kind": "gibbs", "steps": 5, "dims": [1, 2, 4, 6, 8, 10, 20, 50, 100]},
    {"name": "hmc-T0.5", "kind": "hmc", "trajectory": 0.5, "dims": [10, 50, 100]},
    {"name": "hmc-T1", "kind": "hmc", "trajectory": 1.0, "dims": [10, 50, 100]},
    {"name": "hmc-T1.5", "kind": "hmc", "trajectory": 1.5, "dims": [10, 50, 100]}
  ])");
}

inline ScalingConfig parse_scaling_config(ConfigObject& c, const RunOptions& opt) {
  ScalingConfig cfg;
  cfg.rho = c.real("rho", cfg.rho);
  cfg.R = c.replicates("R", cfg.R, opt);
  cfg.max_iter = c.integer("max_iter", cfg.max_iter);
  cfg.algorithms = c.nested_list("algorithms", default_scaling_algorithms(), [](ConfigObject& a) {
    ScalingAlgorithm alg;
    alg.name = a.string("name");
    alg.kind = a.string("kind");
    alg.dims = a.integers("dims");
    a.require(!alg.dims.empty(), "dims must not be empty");
    for (auto d : alg.dims) a.require(d >= 1, "dims must be >= 1");
    if (alg.kind == "rwmh") {
      const auto p = a.string("proposal", "V");
      a.require(p == "V" || p == "V/d", "proposal must be \"V\" or \"V/d\"");
      alg.proposal_over_d = p == "V/d";
    } else if (alg.kind == "gibbs") {
      alg.sd = a.real("sd", alg.sd);
      alg.steps = a.integer("steps", alg.steps);
      a.require(alg.sd > 0 && alg.steps >= 1, "need sd > 0 and steps >= 1");
    } else if (alg.kind == "hmc") {
      alg.trajectory = a.real("trajectory", alg.trajectory);
      alg.leapfrog_steps = a.integer("leapfrog_steps", alg.leapfrog_steps);
      alg.mh_variance = a.real("mh_variance", alg.mh_variance);
      alg.hmc_prob = a.real("hmc_prob", alg.hmc_prob);
      a.require(alg.trajectory > 0 && alg.leapfrog_steps >= 1, "need trajectory > 0 and leapfrog_steps >= 1");
      a.require(alg.mh_variance > 0 && alg.hmc_prob >= 0 && alg.hmc_prob <= 1,
                "need mh_variance > 0 and hmc_prob in [0, 1]");
    } else {
      a.fail("kind must be one of rwmh, gibbs, hmc");
    }
    return alg;
  });
  std::set<std::string> names;
  for (const auto& a : cfg.algorithms) c.require(names.insert(a.name).second, "duplicate algorithm name " + a.name);
  if (opt.kernel) c.require(names.count(*opt.kernel) == 1, "--kernel names no algorithm: " + *opt.kernel);
  c.require(cfg.rho > -1.0 && cfg.rho < 1.0, "rho must lie in (-1, 1)");
  c.require(cfg.R >= 1, "R must be >= 1");
  c.require(cfg.max_iter > 1, "max_iter must exceed 1");
  return cfg;
}

struct ScalingCell {
  std::string algorithm;
  std::string kind;
  long long dim = 0;
  MeetingTimeSample sample;
  long long max_iter = 0;

  double mean_met() const { return sample.R() ? sample.mean() : std::nan(""); }
  /// Mean with every timed-out run counted at max_iter.
  double mean_lower_bound() const {
    double s = 0.0;
    for (auto t : sample.taus) s += static_cast<double>(t);
    s += static_cast<double>(sample.timed_out.size()) * static_cast<double>(max_iter);
    return s / static_cast<double>(sample.taus.size() + sample.timed_out.size());
  }
};

struct ScalingResult {
  ScalingConfig config;
  std::vector<ScalingCell> cells;

  const ScalingCell* find(const std::string& name, long long dim) const {
    for (const auto& c : cells) {
      if (c.algorithm == name && c.dim == dim) return &c;
    }
    return nullptr;
  }
};

/// Streams depend on the algorithm name and dimension only, so a cell's
/// meeting times do not change when other algorithms are added or filtered.
inline ScalingCell run_scaling_cell(const ScalingAlgorithm& alg, long long dim, const ScalingConfig& cfg,
                                    const RunOptions& opt) {
  const models::Ar1Gaussian g(dim, cfg.rho);
  const auto init = [&g](RngStream& s) { return g.sample(s); };
  const StreamFactory f = StreamFactory(opt.seed).child(static_cast<std::uint64_t>(dim), "scaling/" + alg.name);
  const auto R = static_cast<std::size_t>(cfg.R);
  const std::string label = alg.name + " d=" + std::to_string(dim);
  ScalingCell cell{alg.name, alg.kind, dim, {}, cfg.max_iter};
  if (alg.kind == "rwmh") {
    const Matrix cov = alg.proposal_over_d ? Matrix(g.covariance() / static_cast<double>(dim)) : g.covariance();
    cell.sample = sample_meeting_times(RwmhKernel(g.target(), cov), init, R, f, cfg.max_iter, opt.threads, label);
  } else if (alg.kind == "gibbs") {
    const MhWithinGibbsKernel k(g.target(), alg.sd, static_cast<int>(alg.steps));
    cell.sample = sample_meeting_times(k, init, R, f, cfg.max_iter, opt.threads, label);
  } else {
    HmcSettings st;
    st.steps = static_cast<int>(alg.leapfrog_steps);
    st.step_size = alg.trajectory / static_cast<double>(alg.leapfrog_steps);
    st.mh_variance = alg.mh_variance;
    st.hmc_prob = alg.hmc_prob;
    cell.sample = sample_meeting_times(HmcMixtureKernel(g.target(), st), init, R, f, cfg.max_iter, opt.threads, label);
  }
  return cell;
}

inline ScalingResult run_scaling(const ScalingConfig& cfg, const RunOptions& opt) {
  ScalingResult res;
  res.config = cfg;
  for (const auto& alg : cfg.algorithms) {
    if (opt.kernel && *opt.kernel != alg.name) continue;
    for (auto d : alg.dims) res.cells.push_back(run_scaling_cell(alg, d, cfg, opt));
  }
  return res;
}

inline OutputSet scaling_outputs(const ScalingResult& res) {
  OutputSet out;
  io::CsvWriter meet({"algorithm", "kind", "dim", "R", "met", "timeouts", "mean_tau", "mean_tau_lower_bound",
                      "median_tau", "q90_tau", "max_tau"});
  io::CsvWriter taus({"algorithm", "dim", "replicate", "tau"});
  json cells = json::array();
  for (const auto& c : res.cells) {
    const auto& s = c.sample;
    const auto total = static_cast<long long>(s.taus.size() + s.timed_out.size());
    const auto na = [&](auto f) { return s.R() ? io::format_double(static_cast<double>(f())) : std::string("NA"); };
    meet.add(c.algorithm, c.kind, c.dim, total, static_cast<long long>(s.R()),
             static_cast<long long>(s.timed_out.size()), na([&] { return s.mean(); }), c.mean_lower_bound(),
             na([&] { return s.quantile(0.5); }), na([&] { return s.quantile(0.9); }), na([&] { return s.max(); }));
    std::size_t j = 0;
    for (long long r = 0; r < total; ++r) {
      if (std::find(s.timed_out.begin(), s.timed_out.end(), static_cast<std::size_t>(r)) != s.timed_out.end()) {
        taus.add(c.algorithm, c.dim, r, "NA");
      } else {
        taus.add(c.algorithm, c.dim, r, s.taus[j++]);
      }
    }
    cells.push_back({{"algorithm", c.algorithm},
                     {"dim", c.dim},
                     {"mean_tau", s.R() ? json(s.mean()) : json(nullptr)},
                     {"timeouts", s.timed_out.size()}});
  }
  out.add("meeting.csv", meet.str());
  out.add("taus.csv", taus.str());
  out.summary["cells"] = cells;
  return out;
}

}  // namespace umcmc::experiments
