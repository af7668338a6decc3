#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/game.hpp"
#include "lig/generative.hpp"
#include "lig/seed.hpp"

namespace lig {

/// Sharpness (beta) and zero-game membership level (alpha) of the sigmoidal
/// approximation of [z >= 0].
struct SigmoidParams {
  double alpha = 0.1;
  double beta = 0.001;
  int n = 1;

  /// arctanh(1 - 2 alpha^(1/n)); shifts H so that H(0)^n = alpha.
  double shift() const {
    detail::require<ArgumentError>(n >= 1, "sigmoid needs n >= 1");
    detail::require<ArgumentError>(beta > 0.0, "sigmoid beta must be positive");
    const double root = std::pow(alpha, 1.0 / n);
    detail::require<ArgumentError>(alpha > 0.0 && root < 1.0, "sigmoid needs 0 < alpha^(1/n) < 1");
    return std::atanh(1.0 - 2.0 * root);
  }
};

/// H(z) = (1 + tanh(z/beta - arctanh(1 - 2 alpha^(1/n)))) / 2
inline double sigmoid_h(double z, const SigmoidParams& p) {
  return 0.5 * (1.0 + std::tanh(z / p.beta - p.shift()));
}

enum class SmoothMode { likelihood, empirical };

/// Largest n for which the smoothed true proportion (a 2^n sum) is evaluated.
inline constexpr int kSmoothLikelihoodCap = 15;

struct SmoothValue {
  double value = 0.0;    // smooth part only
  double penalty = 0.0;  // rho * ||W||_1, reported separately
  Eigen::MatrixXd grad_w;
  Eigen::VectorXd grad_b;
  double pi_hat = 0.0;  // smoothed empirical proportion
  double pi = 0.0;      // smoothed true proportion (likelihood mode)
  double q = 0.0;
};

namespace detail {

// Accumulates weight * prod_i H(z_i(x)) and its gradient into (value, gw, gb).
inline void accumulate_membership(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, std::span<const std::int8_t> x,
                                  double weight, double shift, double beta, double& value, Eigen::MatrixXd& gw,
                                  Eigen::VectorXd& gb, std::vector<double>& h, std::vector<double>& dh,
                                  std::vector<double>& prefix) {
  const int n = static_cast<int>(w.rows());
  for (int i = 0; i < n; ++i) {
    double f = -b(i);
    for (int j = 0; j < n; ++j)
      if (j != i) f += w(i, j) * x[j];
    const double t = std::tanh(x[i] * f / beta - shift);
    h[i] = 0.5 * (1.0 + t);
    dh[i] = 0.5 * (1.0 - t * t) / beta;
  }
  prefix[0] = 1.0;
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * h[i];
  value += weight * prefix[n];
  double suffix = 1.0;
  for (int i = n - 1; i >= 0; --i) {
    const double others = prefix[i] * suffix;
    const double c = weight * others * dh[i] * x[i];
    if (c != 0.0) {
      for (int j = 0; j < n; ++j)
        if (j != i) gw(i, j) += c * x[j];
      gb(i) -= c;
    }
    suffix *= h[i];
  }
}

}  // namespace detail

/// Smoothed objective and exact gradient of its smooth part.
/// empirical: (1/m) sum_l prod_i H(x_i (w_i' x_{-i} - b_i)).
/// likelihood: smoothed log-likelihood with q-hat = min(pi_hat, 1 - 1/(2m)).
inline SmoothValue smooth_objective(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const JointActionDataset& data,
                                    const SigmoidParams& p, SmoothMode mode, double rho = 0.0) {
  const int n = data.n();
  detail::require<ArgumentError>(w.rows() == n && w.cols() == n && b.size() == n, "parameter shape mismatch");
  detail::require<ArgumentError>(p.n == n, "sigmoid parameters built for a different n");
  if (mode == SmoothMode::likelihood)
    detail::require<CapacityError>(n <= kSmoothLikelihoodCap, "sigmoidal likelihood refused: n above 15");
  const double shift = p.shift();
  SmoothValue out;
  out.penalty = rho * (w.cwiseAbs().sum() - w.diagonal().cwiseAbs().sum());

  std::vector<double> h(n), dh(n), prefix(n + 1);
  Eigen::MatrixXd gw_hat = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gb_hat = Eigen::VectorXd::Zero(n);
  double pi_hat = 0.0;
  const double inv_m = 1.0 / static_cast<double>(data.m());
  for (const auto& u : data.unique())
    detail::accumulate_membership(w, b, u.action.view(), u.count * inv_m, shift, p.beta, pi_hat, gw_hat, gb_hat, h, dh,
                                  prefix);
  out.pi_hat = pi_hat;
  if (mode == SmoothMode::empirical) {
    out.value = pi_hat;
    out.grad_w = std::move(gw_hat);
    out.grad_b = std::move(gb_hat);
    return out;
  }

  Eigen::MatrixXd gw_pi = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gb_pi = Eigen::VectorXd::Zero(n);
  double pi = 0.0;
  const double inv_space = std::ldexp(1.0, -n);
  std::vector<std::int8_t> x(n);
  for (ActionIndex idx = 0; idx < (ActionIndex{1} << n); ++idx) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<std::int8_t>(action_at(idx, i));
    detail::accumulate_membership(w, b, x, inv_space, shift, p.beta, pi, gw_pi, gb_pi, h, dh, prefix);
  }
  // saturated sigmoids can round a proportion to exactly 0 or 1
  constexpr double lo = 1e-300, hi = 1.0 - 1e-16;
  const double ph = std::clamp(pi_hat, lo, hi);
  const double pt = std::clamp(pi, lo, hi);
  const double cap = 1.0 - 0.5 * inv_m;
  const double q = std::min(ph, cap);
  out.pi = pi;
  out.q = q;
  out.value = kl_bernoulli(ph, pt) - kl_bernoulli(ph, q) - n * kLn2;
  double d_hat = std::log(ph / pt) - std::log((1.0 - ph) / (1.0 - pt));
  if (q < ph) d_hat -= std::log(ph / q) - std::log((1.0 - ph) / (1.0 - q));
  const double d_pi = -ph / pt + (1.0 - ph) / (1.0 - pt);
  out.grad_w = d_hat * gw_hat + d_pi * gw_pi;
  out.grad_b = d_hat * gb_hat + d_pi * gb_pi;
  return out;
}

struct SmoothTrainConfig {
  double rho = 0.0;
  double step = 0.01;
  int max_iters = 200;
  std::uint64_t seed = 0;
  double tol_obj = 1e-10;
  int restarts = 5;
  int max_halvings = 30;
  SigmoidParams sigmoid{};
  /// Iterates are ranked by the exact log-likelihood only up to this n.
  int exact_rank_cap = 20;
};

struct SmoothTrainResult {
  InfluenceGame game = InfluenceGame::zero(1);
  double q = 0.0;
  double loglik = -kInf;  // exact log-likelihood when n <= exact_rank_cap
  bool exact_ranked = false;
  std::vector<double> trace;  // penalized smooth objective of the kept restart, per iteration
  int best_restart = 0;
};

namespace detail {

struct Ascent {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
  InfluenceGame kept = InfluenceGame::zero(1);
  double kept_rank = -kInf;
  std::vector<double> trace;
};

// Ascent from (w, b). The step bounds the largest parameter change per
// iteration, since the sharp sigmoid scales gradients by 1/beta; it is halved
// until the penalized objective does not decrease.
inline Ascent ascend(const JointActionDataset& data, const SmoothTrainConfig& cfg, SmoothMode mode, Eigen::MatrixXd w,
                     Eigen::VectorXd b, bool exact) {
  const int n = data.n();
  auto objective = [&](const Eigen::MatrixXd& cw, const Eigen::VectorXd& cb) {
    auto v = smooth_objective(cw, cb, data, cfg.sigmoid, mode, cfg.rho);
    if (!std::isfinite(v.value)) {
      std::ostringstream msg;
      msg << "non-finite sigmoidal objective; W=\n" << cw << "\nb=" << cb.transpose();
      throw NumericError(msg.str());
    }
    return v;
  };
  auto exact_score = [&](const InfluenceGame& g) {
    const auto ne = enumerate_equilibria(g);
    return log_likelihood_at_optimal_q(empirical_proportion(ne, data), ne.proportion(), data.m(), n);
  };

  auto cur = objective(w, b);
  double cur_obj = cur.value - cur.penalty;
  Ascent a;
  a.trace.push_back(cur_obj);
  a.kept = InfluenceGame(w, b);
  a.kept_rank = exact ? exact_score(a.kept) : cur_obj;
  auto consider = [&](double obj) {
    InfluenceGame g(w, b);
    const double s = exact ? exact_score(g) : obj;
    if (s > a.kept_rank) {
      a.kept_rank = s;
      a.kept = std::move(g);
    }
  };

  for (int it = 0; it < cfg.max_iters; ++it) {
    Eigen::MatrixXd dir_w = cur.grad_w;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) dir_w(i, j) = 0.0;
        else if (w(i, j) != 0.0) dir_w(i, j) -= cfg.rho * (w(i, j) > 0.0 ? 1.0 : -1.0);
      }
    const double norm = std::max(dir_w.cwiseAbs().maxCoeff(), cur.grad_b.cwiseAbs().maxCoeff());
    if (!(norm > 0.0)) break;
    double step = cfg.step / norm;
    bool moved = false, improved = false;
    for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
      Eigen::MatrixXd nw = w + step * dir_w;
      Eigen::VectorXd nb = b + step * cur.grad_b;
      auto cand = objective(nw, nb);
      const double cand_obj = cand.value - cand.penalty;
      if (cand_obj >= cur_obj) {
        improved = cand_obj - cur_obj > cfg.tol_obj;
        w = std::move(nw);
        b = std::move(nb);
        cur = std::move(cand);
        cur_obj = cand_obj;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    a.trace.push_back(cur_obj);
    if (n <= 12 || it % 10 == 9) consider(cur_obj);
    if (!improved) break;
  }
  consider(cur_obj);
  a.w = std::move(w);
  a.b = std::move(b);
  return a;
}

}  // namespace detail

/// Gradient ascent on the smoothed objective with an L1 subgradient and step
/// halving. Restart 0 starts at the zero game, where the sharp sigmoid is not
/// saturated; the zero game is stationary for the smoothed likelihood, so in
/// that mode restart 0 first ascends the smoothed empirical proportion. Later
/// restarts start from uniform entries in [-0.1, 0.1]. The iterate with the
/// best exact log-likelihood is returned.
inline SmoothTrainResult train_sigmoidal(const JointActionDataset& data, SmoothTrainConfig cfg, SmoothMode mode) {
  const int n = data.n();
  detail::require<ArgumentError>(cfg.step > 0.0 && cfg.max_iters >= 0 && cfg.restarts >= 1,
                                 "invalid sigmoidal training config");
  cfg.sigmoid.n = n;
  const bool exact = n <= std::min(cfg.exact_rank_cap, kEnumerationCap);

  SmoothTrainResult best;
  double best_rank = -kInf;
  for (int r = 0; r < cfg.restarts; ++r) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    if (r == 0) {
      if (mode == SmoothMode::likelihood) {
        auto warm = detail::ascend(data, cfg, SmoothMode::empirical, w, b, false);
        w = std::move(warm.w);
        b = std::move(warm.b);
      }
    } else {
      std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      std::uniform_real_distribution<double> init(-0.1, 0.1);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
          if (i != j) w(i, j) = init(rng);
        b(i) = init(rng);
      }
    }
    auto a = detail::ascend(data, cfg, mode, std::move(w), std::move(b), exact);
    if (r == 0 || a.kept_rank > best_rank) {
      best_rank = a.kept_rank;
      best.game = std::move(a.kept);
      best.trace = std::move(a.trace);
      best.best_restart = r;
    }
  }

  best.exact_ranked = exact;
  if (exact) {
    const auto ne = enumerate_equilibria(best.game);
    const double pi_hat = empirical_proportion(ne, data);
    best.q = optimal_q(pi_hat, data.m());
    best.loglik = log_likelihood_at_optimal_q(pi_hat, ne.proportion(), data.m(), n);
  } else {
    best.q = optimal_q(empirical_proportion(best.game, data), data.m());
  }
  return best;
}

}  // namespace lig
