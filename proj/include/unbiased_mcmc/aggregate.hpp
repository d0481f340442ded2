#pragma once

// Reductions over independent replicates: means with CLT intervals,
// inefficiency, signed empirical CDFs, quantiles and histograms.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "unbiased_mcmc/error.hpp"
#include "unbiased_mcmc/estimator.hpp"

namespace umcmc {

struct EstimateReport {
  Eigen::VectorXd mean;
  Eigen::VectorXd sample_variance;
  Eigen::VectorXd ci_low;
  Eigen::VectorXd ci_high;
  std::size_t R = 0;
  double mean_cost = 0.0;
  /// mean_cost * sample_variance, componentwise.
  Eigen::VectorXd inefficiency;
  double z = 1.96;

  double standard_error(Eigen::Index i = 0) const {
    return std::sqrt(sample_variance(i) / static_cast<double>(R));
  }
};

/// Index-ordered reduction; `z` is the normal multiplier of the interval.
inline EstimateReport aggregate(std::span<const Eigen::VectorXd> values, std::span<const double> costs,
                                double z = 1.96) {
  const std::size_t R = values.size();
  if (R < 2) throw ContractError("at least two replicates are needed to form a variance");
  if (costs.size() != R) throw ContractError("one cost per replicate is required");
  const Eigen::Index d = values[0].size();
  EstimateReport rep;
  rep.R = R;
  rep.z = z;
  rep.mean = Eigen::VectorXd::Zero(d);
  for (const auto& v : values) {
    if (v.size() != d) throw ContractError("replicate outputs have inconsistent sizes");
    rep.mean += v;
  }
  rep.mean /= static_cast<double>(R);
  rep.sample_variance = Eigen::VectorXd::Zero(d);
  for (const auto& v : values) rep.sample_variance += (v - rep.mean).array().square().matrix();
  rep.sample_variance /= static_cast<double>(R - 1);
  const Eigen::VectorXd half = z * (rep.sample_variance / static_cast<double>(R)).array().sqrt().matrix();
  rep.ci_low = rep.mean - half;
  rep.ci_high = rep.mean + half;
  double cost_sum = 0.0;
  for (double c : costs) cost_sum += c;
  rep.mean_cost = cost_sum / static_cast<double>(R);
  rep.inefficiency = rep.mean_cost * rep.sample_variance;
  return rep;
}

inline EstimateReport aggregate(std::span<const double> values, std::span<const double> costs,
                                double z = 1.96) {
  std::vector<Eigen::VectorXd> v;
  v.reserve(values.size());
  for (double x : values) v.push_back(Eigen::VectorXd::Constant(1, x));
  return aggregate(std::span<const Eigen::VectorXd>(v), costs, z);
}

struct WeightedValue {
  double weight = 0.0;
  double value = 0.0;
};

/// Pools R signed measures into one with weights divided by R, projecting each
/// atom to a real number.
template <class State, class Proj>
std::vector<WeightedValue> pool_univariate(std::span<const SignedMeasure<State>> measures, Proj&& proj) {
  std::vector<WeightedValue> out;
  if (measures.empty()) return out;
  const double inv_r = 1.0 / static_cast<double>(measures.size());
  for (const auto& mu : measures) {
    for (const auto& a : mu.atoms) out.push_back({a.weight * inv_r, proj(a.point)});
  }
  return out;
}

struct QuantileEstimate {
  /// Atom values at every sorted position where the cumulative weight crosses q.
  std::vector<double> candidates;
  /// Smallest crossing atom.
  double canonical = 0.0;
};

/// F(s) = sum of weights of atoms <= s. Not monotone when weights are negative.
class SignedEcdf {
 public:
  explicit SignedEcdf(std::vector<WeightedValue> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ContractError("empty pool of atoms");
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const WeightedValue& a, const WeightedValue& b) { return a.value < b.value; });
    cumulative_.resize(atoms_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      acc += atoms_[i].weight;
      cumulative_[i] = acc;
    }
  }

  double operator()(double s) const {
    const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), s,
                                     [](double v, const WeightedValue& a) { return v < a.value; });
    if (it == atoms_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
  }

  QuantileEstimate quantile(double q) const {
    QuantileEstimate out;
    double before = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (before <= q && cumulative_[i] > q) out.candidates.push_back(atoms_[i].value);
      before = cumulative_[i];
    }
    if (out.candidates.empty()) throw ContractError("no atom crosses the requested level");
    out.canonical = out.candidates.front();
    return out;
  }

  const std::vector<WeightedValue>& sorted_atoms() const noexcept { return atoms_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }

  /// sup over the grid of |F(s) - reference(s)|.
  template <class Ref>
  double sup_distance(std::span<const double> grid, Ref&& reference) const {
    double worst = 0.0;
    for (double s : grid) worst = std::max(worst, std::abs((*this)(s) - reference(s)));
    return worst;
  }

 private:
  std::vector<WeightedValue> atoms_;
  std::vector<double> cumulative_;
};

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Per-bin unbiased estimates of P(X(i) in [b_j, b_{j+1})) from replicate
/// signed measures. Estimates can be negative and are reported as is.
template <class State, class Proj>
std::vector<HistogramBin> histogram(std::span<const SignedMeasure<State>> measures, Proj&& proj,
                                    std::span<const double> breaks, double z = 1.96) {
  if (breaks.size() < 2) throw ContractError("histogram needs at least two breaks");
  for (std::size_t j = 1; j < breaks.size(); ++j) {
    if (!(breaks[j] > breaks[j - 1])) throw ContractError("breaks must be strictly increasing");
  }
  const std::size_t nbins = breaks.size() - 1;
  std::vector<Eigen::VectorXd> per_rep;
  per_rep.reserve(measures.size());
  for (const auto& mu : measures) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nbins));
    for (const auto& a : mu.atoms) {
      const double x = proj(a.point);
      if (x < breaks.front() || x >= breaks.back()) continue;
      const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
      const auto bin = static_cast<Eigen::Index>(it - breaks.begin()) - 1;
      v(bin) += a.weight;
    }
    per_rep.push_back(std::move(v));
  }
  const std::vector<double> zero_costs(per_rep.size(), 0.0);
  const auto rep = aggregate(std::span<const Eigen::VectorXd>(per_rep), zero_costs, z);
  std::vector<HistogramBin> out(nbins);
  for (std::size_t j = 0; j < nbins; ++j) {
    const auto b = static_cast<Eigen::Index>(j);
    out[j] = {breaks[j], breaks[j + 1], rep.mean(b), rep.ci_low(b), rep.ci_high(b)};
  }
  return out;
}

}  // namespace umcmc
