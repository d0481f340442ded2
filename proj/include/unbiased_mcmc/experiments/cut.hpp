#pragma once

// Two-stage estimator for the cut distribution pi1(theta1) pi2(theta2 | theta1),
// and the HPV / cervical cancer pipeline built on it:
//
//   1. pilot: pi_0 = N(0, I) and proposal covariance I; k from the pilot
//      meeting-time quantile, m = pilot_multiplier * k; estimate the mean and
//      covariance of theta2 under the cut distribution;
//   2. adapted: pi_0 = N(mean, cov) and proposal covariance cov; meeting
//      times, k from the quantile, m = multiplier * k; estimates, marginal
//      histograms and signed empirical CDFs of theta2;
//   3. ground truth: truth_steps RWMH steps for each of truth_outer exact
//      draws of theta1, keeping the final state.
//
// Outputs: pilot_meetingtimes.csv, meetingtimes.csv, estimates.csv,
// histogram.csv, cdf.csv.

#include <cmath>
#include <string>
#include <vector>

#include "unbiased_mcmc/aggregate.hpp"
#include "unbiased_mcmc/diagnostics.hpp"
#include "unbiased_mcmc/estimator.hpp"
#include "unbiased_mcmc/experiments/common.hpp"
#include "unbiased_mcmc/io.hpp"
#include "unbiased_mcmc/kernels/rwmh.hpp"
#include "unbiased_mcmc/models/cut.hpp"

namespace umcmc::experiments {

/// Stage-2 chains for atom `atom_index` did not meet.
class CutTimeoutError : public TimeoutError {
 public:
  CutTimeoutError(std::size_t atom_index, long long max_iter)
      : TimeoutError("stage-2 chains for atom " + std::to_string(atom_index) + " did not meet within max_iter = " +
                         std::to_string(max_iter),
                     max_iter),
        atom_index_(atom_index) {}
  std::size_t atom_index() const noexcept { return atom_index_; }

 private:
  std::size_t atom_index_;
};

struct CutReplicate {
  Eigen::VectorXd value;  // sum over atoms of H_{k:m}(h(theta1, .)) / n1
  double cost = 0.0;
  std::vector<long long> taus;
  /// Per component of theta2: atoms of the pooled signed measure, weights / n1.
  std::vector<std::vector<WeightedValue>> marginal_atoms;
};

/// One replicate of the two-stage estimator: n1 exact stage-1 draws, each with
/// a coupled stage-2 run. make_kernel(theta1) builds the stage-2 kernel and
/// init(RngStream&) draws pi_0. With keep_atoms, the stage-2 signed measure is
/// kept per component, merged over equal values.
template <class Stage1, class MakeKernel, class Init, class H>
CutReplicate cut_replicate(Stage1&& sample_theta1, MakeKernel&& make_kernel, Init&& init, H&& h, std::size_t n1,
                           long long k, long long m, RngStream& s, long long max_iter = kDefaultMaxIter,
                           bool keep_atoms = false) {
  if (n1 < 1) throw ContractError("n1 must be >= 1");
  CutReplicate out;
  const double w = 1.0 / static_cast<double>(n1);
  for (std::size_t n = 0; n < n1; ++n) {
    const Point theta1 = sample_theta1(s);
    const auto kernel = make_kernel(theta1);
    CoupledRun<Point> run;
    try {
      run = run_coupled(kernel, init, k, m, s, max_iter);
    } catch (const TimeoutError&) {
      throw CutTimeoutError(n, max_iter);
    }
    const auto hb = [&](const Point& theta2) -> Eigen::VectorXd { return h(theta1, theta2); };
    const Eigen::VectorXd v = h_km(run, hb, k, m);
    if (n == 0) {
      out.value = w * v;
    } else {
      out.value += w * v;
    }
    out.cost += run.cost();
    out.taus.push_back(run.tau);
    if (keep_atoms) {
      const auto mu = signed_measure(run, k, m);
      const auto dim = static_cast<std::size_t>(run.x_states[0].size());
      out.marginal_atoms.resize(dim);
      for (std::size_t c = 0; c < dim; ++c) {
        std::vector<WeightedValue> atoms;
        atoms.reserve(mu.atoms.size());
        for (const auto& a : mu.atoms) atoms.push_back({w * a.weight, a.point(static_cast<Eigen::Index>(c))});
        std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
        for (const auto& a : atoms) {
          auto& dst = out.marginal_atoms[c];
          if (!dst.empty() && dst.back().value == a.value) {
            dst.back().weight += a.weight;
          } else {
            dst.push_back(a);
          }
        }
      }
    }
  }
  return out;
}

struct CutConfig {
  std::string hpv = default_data_file("hpv.csv");
  std::string cancer = default_data_file("cancer.csv");
  bool raw_pyears = false;
  long long pilot_meeting_R = 1000;
  double pilot_quantile = 0.95;
  long long pilot_multiplier = 5;
  long long pilot_R = 1000;
  long long meeting_R = 10000;
  double quantile = 0.95;
  long long multiplier = 10;
  long long R = 10000;
  long long n1 = 1;
  long long truth_outer = 10000;
  long long truth_steps = 1000;
  long long hist_bins = 50;
  long long cdf_grid = 2000;
  long long max_iter = kDefaultMaxIter;
};

inline CutConfig parse_cut_config(ConfigObject& c, const RunOptions& opt) {
  CutConfig cfg;
  cfg.hpv = c.has("hpv") ? resolve_data_path(opt, c.string("hpv")).string() : c.string("hpv", cfg.hpv);
  cfg.cancer = c.has("cancer") ? resolve_data_path(opt, c.string("cancer")).string() : c.string("cancer", cfg.cancer);
  cfg.raw_pyears = c.boolean("raw_pyears", cfg.raw_pyears);
  cfg.pilot_meeting_R = c.integer("pilot_meeting_R", cfg.pilot_meeting_R);
  cfg.pilot_quantile = c.real("pilot_quantile", cfg.pilot_quantile);
  cfg.pilot_multiplier = c.integer("pilot_multiplier", cfg.pilot_multiplier);
  cfg.pilot_R = c.integer("pilot_R", cfg.pilot_R);
  cfg.meeting_R = c.integer("meeting_R", cfg.meeting_R);
  cfg.quantile = c.real("quantile", cfg.quantile);
  cfg.multiplier = c.integer("multiplier", cfg.multiplier);
  cfg.R = c.replicates("R", cfg.R, opt);
  cfg.n1 = c.integer("n1", cfg.n1);
  cfg.truth_outer = c.integer("truth_outer", cfg.truth_outer);
  cfg.truth_steps = c.integer("truth_steps", cfg.truth_steps);
  cfg.hist_bins = c.integer("hist_bins", cfg.hist_bins);
  cfg.cdf_grid = c.integer("cdf_grid", cfg.cdf_grid);
  cfg.max_iter = c.integer("max_iter", cfg.max_iter);
  c.require(cfg.pilot_meeting_R >= 1 && cfg.meeting_R >= 1, "meeting-time counts must be >= 1");
  c.require(cfg.pilot_R >= 3 && cfg.R >= 2, "need pilot_R >= 3 and R >= 2");
  c.require(cfg.pilot_quantile > 0 && cfg.pilot_quantile <= 1 && cfg.quantile > 0 && cfg.quantile <= 1,
            "quantiles must lie in (0, 1]");
  c.require(cfg.pilot_multiplier >= 1 && cfg.multiplier >= 1, "multipliers must be >= 1");
  c.require(cfg.n1 >= 1, "n1 must be >= 1");
  c.require(cfg.truth_outer >= 2 && cfg.truth_steps >= 1, "invalid ground-truth settings");
  c.require(cfg.hist_bins >= 1 && cfg.cdf_grid >= 2, "invalid histogram or CDF grid size");
  c.require(cfg.max_iter > 1, "max_iter must exceed 1");
  return cfg;
}

struct CutStage2Settings {
  Point init_mean;
  Matrix init_cov;
  Matrix proposal_cov;
};

struct CutResult {
  CutConfig config;
  std::map<std::string, std::string> checksums;
  std::vector<long long> pilot_taus;
  KmChoice pilot_km;
  Point pilot_mean;
  Matrix pilot_cov;
  MeetingTimeSample meeting;
  KmChoice km;
  EstimateReport estimate;                         // theta2_1, theta2_2
  std::vector<std::vector<HistogramBin>> histogram;  // per component
  std::vector<std::vector<double>> truth;            // ground-truth draws per component
  std::vector<std::vector<std::pair<double, double>>> cdf;  // (s, F_hat(s)) per component
  std::vector<double> sup_cdf_distance;
};

inline models::CutModel load_cut_model(const CutConfig& cfg) {
  return models::CutModel(io::load_hpv_data(cfg.hpv), io::load_cancer_data(cfg.cancer, cfg.raw_pyears));
}

/// Meeting times of stage-2 chains, one fresh theta1 per replicate.
inline std::vector<long long> cut_meeting_times(const models::CutModel& model, const CutStage2Settings& st,
                                                std::size_t R, const StreamFactory& f, long long max_iter,
                                                std::size_t threads) {
  const auto init_factor = std::make_shared<const CholeskyFactor>(st.init_cov);
  const MultivariateNormal init_law{st.init_mean, init_factor};
  return run_replicates(R, threads, [&](std::size_t r) {
    RngStream s = f.derive(r, "meeting");
    const Point theta1 = model.sample_theta1(s);
    const RwmhKernel kernel(model.stage2_target(theta1), st.proposal_cov);
    try {
      return meeting_time(kernel, [&](RngStream& g) { return init_law.sample(g); }, s, max_iter).tau;
    } catch (const TimeoutError&) {
      throw CutTimeoutError(0, max_iter);
    }
  });
}

inline MeetingTimeSample to_sample(std::vector<long long> taus, std::string label) {
  MeetingTimeSample s;
  s.taus = std::move(taus);
  s.label = std::move(label);
  return s;
}

inline CutResult run_cut(const CutConfig& cfg, const RunOptions& opt) {
  CutResult res;
  res.config = cfg;
  res.checksums["hpv"] = io::file_checksum(cfg.hpv);
  res.checksums["cancer"] = io::file_checksum(cfg.cancer);
  const auto model = load_cut_model(cfg);
  const StreamFactory root(opt.seed);
  const auto stage1 = [&model](RngStream& s) { return model.sample_theta1(s); };

  // Pilot.
  CutStage2Settings pilot{Point::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  res.pilot_taus = cut_meeting_times(model, pilot, static_cast<std::size_t>(cfg.pilot_meeting_R),
                                     root.child(0, "cut-pilot-meeting"), cfg.max_iter, opt.threads);
  res.pilot_km = choose_k_m(to_sample(res.pilot_taus, "pilot"), cfg.pilot_quantile, cfg.pilot_multiplier);
  const auto moments = [](const Point&, const Point& th2) -> Eigen::VectorXd {
    Eigen::VectorXd v(5);
    v << th2(0), th2(1), th2(0) * th2(0), th2(0) * th2(1), th2(1) * th2(1);
    return v;
  };
  const auto pilot_factor = std::make_shared<const CholeskyFactor>(pilot.init_cov);
  const auto pilot_init = [law = MultivariateNormal{pilot.init_mean, pilot_factor}](RngStream& s) {
    return law.sample(s);
  };
  const auto make_pilot_kernel = [&](const Point& th1) { return RwmhKernel(model.stage2_target(th1), pilot.proposal_cov); };
  const StreamFactory pf = root.child(0, "cut-pilot-estimates");
  const auto pilot_reps = run_replicates(static_cast<std::size_t>(cfg.pilot_R), opt.threads, [&](std::size_t r) {
    RngStream s = pf.derive(r, "replicate");
    return cut_replicate(stage1, make_pilot_kernel, pilot_init, moments, 1, res.pilot_km.k, res.pilot_km.m, s,
                         std::max(cfg.max_iter, res.pilot_km.m + 1));
  });
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(5);
  for (const auto& r : pilot_reps) mom += r.value;
  mom /= static_cast<double>(pilot_reps.size());
  res.pilot_mean = mom.head(2);
  res.pilot_cov.resize(2, 2);
  res.pilot_cov(0, 0) = mom(2) - mom(0) * mom(0);
  res.pilot_cov(0, 1) = res.pilot_cov(1, 0) = mom(3) - mom(0) * mom(1);
  res.pilot_cov(1, 1) = mom(4) - mom(1) * mom(1);
  std::shared_ptr<const CholeskyFactor> adapted_factor;
  try {
    adapted_factor = std::make_shared<const CholeskyFactor>(res.pilot_cov);
  } catch (const ParameterError&) {
    throw NumericalError("pilot covariance estimate is not positive definite; increase pilot_R");
  }

  // Adapted kernel.
  const CutStage2Settings adapted{res.pilot_mean, res.pilot_cov, res.pilot_cov};
  res.meeting = to_sample(cut_meeting_times(model, adapted, static_cast<std::size_t>(cfg.meeting_R),
                                            root.child(0, "cut-meeting"), cfg.max_iter, opt.threads),
                          "adapted");
  res.km = choose_k_m(res.meeting, cfg.quantile, cfg.multiplier);
  const MultivariateNormal adapted_law{res.pilot_mean, adapted_factor};
  const auto init = [&adapted_law](RngStream& s) { return adapted_law.sample(s); };
  const auto make_kernel = [&](const Point& th1) { return RwmhKernel(model.stage2_target(th1), res.pilot_cov); };
  const auto identity = [](const Point&, const Point& th2) -> Eigen::VectorXd { return th2; };
  const StreamFactory ef = root.child(0, "cut-estimates");
  auto reps = run_replicates(static_cast<std::size_t>(cfg.R), opt.threads, [&](std::size_t r) {
    RngStream s = ef.derive(r, "replicate");
    return cut_replicate(stage1, make_kernel, init, identity, static_cast<std::size_t>(cfg.n1), res.km.k, res.km.m,
                         s, std::max(cfg.max_iter, res.km.m + 1), true);
  });
  std::vector<Eigen::VectorXd> values;
  std::vector<double> costs;
  for (const auto& r : reps) {
    values.push_back(r.value);
    costs.push_back(r.cost);
  }
  res.estimate = aggregate(std::span<const Eigen::VectorXd>(values), costs);

  // Ground truth.
  const StreamFactory tf = root.child(0, "cut-truth");
  const auto truth = run_replicates(static_cast<std::size_t>(cfg.truth_outer), opt.threads, [&](std::size_t r) {
    RngStream s = tf.derive(r, "truth");
    const Point th1 = model.sample_theta1(s);
    const auto kernel = make_kernel(th1);
    Point x = init(s);
    for (long long t = 0; t < cfg.truth_steps; ++t) x = kernel.single_step(x, s);
    return x;
  });
  res.truth.assign(2, {});
  for (const auto& x : truth) {
    res.truth[0].push_back(x(0));
    res.truth[1].push_back(x(1));
  }

  // Marginal histograms, signed ECDFs and their distance to the ground truth.
  const double inv_r = 1.0 / static_cast<double>(reps.size());
  for (std::size_t c = 0; c < 2; ++c) {
    auto sorted_truth = res.truth[c];
    std::sort(sorted_truth.begin(), sorted_truth.end());
    const auto q = [&sorted_truth](double level) {
      auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(sorted_truth.size())));
      return sorted_truth[std::clamp<std::size_t>(idx, 1, sorted_truth.size()) - 1];
    };
    const double lo = q(0.001);
    const double hi = q(0.999);
    const double pad = 0.05 * (hi - lo);
    const auto breaks = linspace_breaks(lo - pad, hi + pad, static_cast<std::size_t>(cfg.hist_bins));
    std::vector<Eigen::VectorXd> per_rep;
    std::vector<WeightedValue> pooled;
    for (const auto& r : reps) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.hist_bins);
      for (const auto& a : r.marginal_atoms[c]) {
        pooled.push_back({a.weight * inv_r, a.value});
        if (a.value < breaks.front() || a.value >= breaks.back()) continue;
        const auto it = std::upper_bound(breaks.begin(), breaks.end(), a.value);
        v(static_cast<Eigen::Index>(it - breaks.begin()) - 1) += a.weight;
      }
      per_rep.push_back(std::move(v));
    }
    const std::vector<double> zero(per_rep.size(), 0.0);
    const auto hrep = aggregate(std::span<const Eigen::VectorXd>(per_rep), zero);
    std::vector<HistogramBin> bins;
    for (Eigen::Index j = 0; j < cfg.hist_bins; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      bins.push_back({breaks[jj], breaks[jj + 1], hrep.mean(j), hrep.ci_low(j), hrep.ci_high(j)});
    }
    res.histogram.push_back(std::move(bins));
    const SignedEcdf ecdf(std::move(pooled));
    std::vector<double> grid(static_cast<std::size_t>(cfg.cdf_grid));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid.size() - 1);
    }
    const auto truth_cdf = [&sorted_truth](double s) {
      const auto it = std::upper_bound(sorted_truth.begin(), sorted_truth.end(), s);
      return static_cast<double>(it - sorted_truth.begin()) / static_cast<double>(sorted_truth.size());
    };
    res.sup_cdf_distance.push_back(ecdf.sup_distance(std::span<const double>(grid), truth_cdf));
    std::vector<std::pair<double, double>> curve;
    for (double s : grid) curve.emplace_back(s, ecdf(s));
    res.cdf.push_back(std::move(curve));
  }
  return res;
}

inline OutputSet cut_outputs(const CutResult& res) {
  OutputSet out;
  out.data_checksums = res.checksums;
  io::CsvWriter pilot({"replicate", "tau"});
  for (std::size_t r = 0; r < res.pilot_taus.size(); ++r) pilot.add(static_cast<long long>(r), res.pilot_taus[r]);
  out.add("pilot_meetingtimes.csv", pilot.str());
  io::CsvWriter taus({"replicate", "tau"});
  for (std::size_t r = 0; r < res.meeting.taus.size(); ++r) taus.add(static_cast<long long>(r), res.meeting.taus[r]);
  out.add("meetingtimes.csv", taus.str());
  io::CsvWriter est({"parameter", "k", "m", "R", "estimate", "ci_low", "ci_high", "variance", "mean_cost",
                     "truth_mean"});
  for (Eigen::Index i = 0; i < 2; ++i) {
    double tm = 0.0;
    for (double v : res.truth[static_cast<std::size_t>(i)]) tm += v;
    tm /= static_cast<double>(res.truth[static_cast<std::size_t>(i)].size());
    est.add("theta2_" + std::to_string(i + 1), res.km.k, res.km.m, static_cast<long long>(res.estimate.R),
            res.estimate.mean(i), res.estimate.ci_low(i), res.estimate.ci_high(i), res.estimate.sample_variance(i),
            res.estimate.mean_cost, tm);
  }
  out.add("estimates.csv", est.str());
  io::CsvWriter hist({"parameter", "lower", "upper", "estimate", "ci_low", "ci_high", "truth"});
  for (std::size_t c = 0; c < res.histogram.size(); ++c) {
    for (const auto& b : res.histogram[c]) {
      double in = 0.0;
      for (double v : res.truth[c]) in += (v >= b.lower && v < b.upper) ? 1.0 : 0.0;
      hist.add("theta2_" + std::to_string(c + 1), b.lower, b.upper, b.estimate, b.ci_low, b.ci_high,
               in / static_cast<double>(res.truth[c].size()));
    }
  }
  out.add("histogram.csv", hist.str());
  io::CsvWriter cdf({"parameter", "s", "signed_ecdf"});
  for (std::size_t c = 0; c < res.cdf.size(); ++c) {
    for (const auto& [s, f] : res.cdf[c]) cdf.add("theta2_" + std::to_string(c + 1), s, f);
  }
  out.add("cdf.csv", cdf.str());
  json& s = out.summary;
  s["pilot_k"] = res.pilot_km.k;
  s["pilot_m"] = res.pilot_km.m;
  s["pilot_mean"] = {res.pilot_mean(0), res.pilot_mean(1)};
  s["pilot_cov"] = {res.pilot_cov(0, 0), res.pilot_cov(0, 1), res.pilot_cov(1, 1)};
  s["mean_tau"] = res.meeting.mean();
  s["max_tau"] = res.meeting.max();
  s["k"] = res.km.k;
  s["m"] = res.km.m;
  s["sup_cdf_distance"] = res.sup_cdf_distance;
  return out;
}

}  // namespace umcmc::experiments
