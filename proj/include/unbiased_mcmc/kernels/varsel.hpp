#pragma once

// Bayesian variable selection over gamma in {0,1}^p with a g-prior marginal
// likelihood and a sparsity prior p^(-kappa |gamma|) 1(|gamma| <= s0).
// The kernel is an equal mixture of a single-flip and a swap Metropolis move;
// the coupled version shares the flip coordinate and maximally couples the
// swap indices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "unbiased_mcmc/coupling.hpp"
#include "unbiased_mcmc/kernels/kernel.hpp"

namespace umcmc {

class VarSelModel {
 public:
  VarSelModel(Matrix X, Point Y, double g, double kappa, std::size_t s0)
      : X_(std::move(X)), Y_(std::move(Y)), g_(g), kappa_(kappa), s0_(s0) {
    if (X_.rows() < 1 || X_.cols() < 1) throw ParameterError("X must have n, p >= 1");
    if (Y_.size() != X_.rows()) throw ParameterError("Y length must equal the rows of X");
    if (!(g_ > 0.0)) throw ParameterError("g must be positive");
    if (s0_ > static_cast<std::size_t>(X_.cols())) throw ParameterError("s0 must not exceed p");
    xtx_ = X_.transpose() * X_;
    xty_ = X_.transpose() * Y_;
    yty_ = Y_.squaredNorm();
  }

  std::size_t p() const noexcept { return static_cast<std::size_t>(X_.cols()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(X_.rows()); }
  double g() const noexcept { return g_; }
  double kappa() const noexcept { return kappa_; }
  std::size_t s0() const noexcept { return s0_; }
  const Matrix& X() const noexcept { return X_; }
  const Point& Y() const noexcept { return Y_; }

  /// log pi(gamma | X, Y) up to a constant. -inf when |gamma| > s0 or when the
  /// selected Gram matrix is numerically singular.
  double log_posterior(const std::vector<std::uint8_t>& gamma) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      if (gamma[j]) idx.push_back(static_cast<Eigen::Index>(j));
    }
    const auto size = idx.size();
    if (size > s0_) return kNegInf;
    double r2 = 0.0;
    if (size > 0) {
      const auto k = static_cast<Eigen::Index>(size);
      Matrix a(k, k);
      Point b(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        b(r) = xty_(idx[r]);
        for (Eigen::Index c = 0; c < k; ++c) a(r, c) = xtx_(idx[r], idx[c]);
      }
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() != Eigen::Success) return kNegInf;
      const Point w = llt.matrixL().solve(b);
      r2 = w.squaredNorm() / yty_;
    }
    const double sz = static_cast<double>(size);
    return -0.5 * sz * std::log1p(g_) - 0.5 * static_cast<double>(n()) * std::log1p(g_ * (1.0 - r2)) -
           kappa_ * sz * std::log(static_cast<double>(p()));
  }

 private:
  Matrix X_;
  Point Y_;
  double g_;
  double kappa_;
  std::size_t s0_;
  Matrix xtx_;
  Point xty_;
  double yty_ = 0.0;
};

struct VarSelState {
  std::vector<std::uint8_t> gamma;
  std::size_t count = 0;
  double log_post = 0.0;  // cached; a deterministic function of gamma

  bool operator==(const VarSelState& other) const { return gamma == other.gamma; }
};

class VarSelKernel {
 public:
  using State = VarSelState;

  explicit VarSelKernel(std::shared_ptr<const VarSelModel> model) : model_(std::move(model)) {}

  const VarSelModel& model() const noexcept { return *model_; }

  State make_state(std::vector<std::uint8_t> gamma) const {
    if (gamma.size() != model_->p()) throw ParameterError("gamma length must equal p");
    State st;
    st.count = 0;
    for (auto& b : gamma) {
      b = b ? 1 : 0;
      st.count += b;
    }
    st.gamma = std::move(gamma);
    st.log_post = model_->log_posterior(st.gamma);
    return st;
  }

  /// Initial law: s0 coordinates drawn without replacement, each set to 1
  /// with probability 1/2.
  State sample_initial(RngStream& s) const {
    const std::size_t p = model_->p();
    std::vector<std::size_t> perm(p);
    for (std::size_t j = 0; j < p; ++j) perm[j] = j;
    std::vector<std::uint8_t> gamma(p, 0);
    const std::size_t draws = std::min(model_->s0(), p);
    for (std::size_t j = 0; j < draws; ++j) {
      const std::size_t pick = j + s.index(p - j);
      std::swap(perm[j], perm[pick]);
      gamma[perm[j]] = s.uniform() < 0.5 ? 1 : 0;
    }
    return make_state(std::move(gamma));
  }

  State single_step(const State& x, RngStream& s) const {
    check(x);
    const bool flip = s.uniform() < 0.5;
    if (flip) {
      const std::size_t i = s.index(model_->p());
      State prop = flipped(x, i);
      return accept_or_keep(x, std::move(prop), std::log(s.uniform_pos()));
    }
    if (degenerate(x)) return x;
    const auto zeros = positions(x, 0);
    const auto ones = positions(x, 1);
    const std::size_t i0 = zeros[s.index(zeros.size())];
    const std::size_t i1 = ones[s.index(ones.size())];
    State prop = swapped(x, i0, i1);
    return accept_or_keep(x, std::move(prop), std::log(s.uniform_pos()));
  }

  CoupledStep<State> coupled_step(const State& x, const State& y, RngStream& s) const {
    check(x);
    check(y);
    const bool flip = s.uniform() < 0.5;
    CoupledStep<State> out;
    if (flip) {
      const std::size_t i = s.index(model_->p());
      State px = flipped(x, i);
      State py = same_state(x, y) ? px : flipped(y, i);
      const double log_u = std::log(s.uniform_pos());
      out.x = accept_or_keep(x, std::move(px), log_u);
      out.y = accept_or_keep(y, std::move(py), log_u);
    } else {
      const bool dx = degenerate(x);
      const bool dy = degenerate(y);
      std::optional<State> px;
      std::optional<State> py;
      if (!dx && !dy) {
        const auto [i0, j0] = couple_uniform_sets(x, y, 0, s);
        const auto [i1, j1] = couple_uniform_sets(x, y, 1, s);
        px = swapped(x, i0, i1);
        py = (same_state(x, y) && i0 == j0 && i1 == j1) ? *px : swapped(y, j0, j1);
      } else if (!dx) {
        px = random_swap(x, s);
      } else if (!dy) {
        py = random_swap(y, s);
      }
      const double log_u = std::log(s.uniform_pos());
      out.x = px ? accept_or_keep(x, std::move(*px), log_u) : x;
      out.y = py ? accept_or_keep(y, std::move(*py), log_u) : y;
    }
    out.met = same_state(out.x, out.y);
    return out;
  }

 private:
  void check(const State& x) const {
    if (x.gamma.size() != model_->p()) throw ContractError("gamma length must equal p");
    if (x.count > model_->s0()) throw ContractError("|gamma| exceeds s0 on input");
  }

  bool degenerate(const State& x) const { return x.count == 0 || x.count == model_->p(); }

  static std::vector<std::size_t> positions(const State& x, std::uint8_t value) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < x.gamma.size(); ++j) {
      if (x.gamma[j] == value) out.push_back(j);
    }
    return out;
  }

  State flipped(const State& x, std::size_t i) const {
    State st;
    st.gamma = x.gamma;
    st.gamma[i] = 1 - st.gamma[i];
    st.count = st.gamma[i] ? x.count + 1 : x.count - 1;
    st.log_post = model_->log_posterior(st.gamma);
    return st;
  }

  State swapped(const State& x, std::size_t i0, std::size_t i1) const {
    State st;
    st.gamma = x.gamma;
    std::swap(st.gamma[i0], st.gamma[i1]);
    st.count = x.count;
    st.log_post = model_->log_posterior(st.gamma);
    return st;
  }

  State random_swap(const State& x, RngStream& s) const {
    const auto zeros = positions(x, 0);
    const auto ones = positions(x, 1);
    const std::size_t i0 = zeros[s.index(zeros.size())];
    const std::size_t i1 = ones[s.index(ones.size())];
    return swapped(x, i0, i1);
  }

  // Maximal coupling of the uniform laws on {j : x_j = v} and {j : y_j = v}.
  std::pair<std::size_t, std::size_t> couple_uniform_sets(const State& x, const State& y,
                                                          std::uint8_t v, RngStream& s) const {
    const std::size_t p = model_->p();
    const std::size_t nx = v ? x.count : p - x.count;
    const std::size_t ny = v ? y.count : p - y.count;
    std::vector<double> qx(p, 0.0);
    std::vector<double> qy(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
      if (x.gamma[j] == v) qx[j] = 1.0 / static_cast<double>(nx);
      if (y.gamma[j] == v) qy[j] = 1.0 / static_cast<double>(ny);
    }
    const auto ij = maximal_coupling_discrete(qx, qy, s);
    return {ij.i, ij.j};
  }

  static State accept_or_keep(const State& x, State proposal, double log_u) {
    if (detail::mh_accept(log_u, proposal.log_post, x.log_post)) return proposal;
    return x;
  }

  std::shared_ptr<const VarSelModel> model_;
};

}  // namespace umcmc
