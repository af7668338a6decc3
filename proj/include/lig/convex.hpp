#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/game.hpp"
#include "lig/generative.hpp"
#include "lig/lp.hpp"
#include "lig/seed.hpp"

namespace lig {

// ---------------------------------------------------------------------------
// Losses

/// log(1 + exp(-z))
inline double logistic_loss(double z) {
  return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

/// log(1 + sum_i exp(-z_i)), shifted by max(-z_i, 0) so large margins cannot overflow.
inline double simul_logistic_loss(std::span<const double> z) {
  double shift = 0.0;
  for (double v : z) shift = std::max(shift, -v);
  double s = std::exp(-shift);
  for (double v : z) s += std::exp(-v - shift);
  return shift + std::log(s);
}

// ---------------------------------------------------------------------------
// Configuration and results

enum class ConvexMethod { ind_svm, sim_svm, ind_logistic, sim_logistic };

inline std::string to_string(ConvexMethod m) {
  switch (m) {
    case ConvexMethod::ind_svm: return "ind_svm";
    case ConvexMethod::sim_svm: return "sim_svm";
    case ConvexMethod::ind_logistic: return "ind_logistic";
    case ConvexMethod::sim_logistic: return "sim_logistic";
  }
  return "?";
}

struct ConvexTrainConfig {
  double rho = 0.0;
  ConvexMethod method = ConvexMethod::sim_logistic;
  int max_iters = 5000;
  double tol_grad = 1e-6;
  double tol_feas = 1e-7;
  std::uint64_t seed = 0;
};

struct TrainResult {
  InfluenceGame game = InfluenceGame::zero(1);
  std::vector<bool> per_player_degenerate;
  double objective = 0.0;
  std::optional<double> dual_objective;
  int iterations = 0;
  bool converged = true;
  double residual = 0.0;  // stationarity residual (logistic) or relative duality gap (hinge)
};

/// Rows with ||(w_i, b_i)||_inf at or below this count as the zero solution
/// (logistic biases use a tolerance tied to tol_grad).
inline constexpr double kZeroRowTol = 1e-8;

namespace detail {

// The unpenalized bias of a first-order solution is only accurate to the
// stationarity tolerance, so logistic trainers pass a looser bias_tol.
inline std::vector<bool> zero_rows(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double bias_tol = kZeroRowTol) {
  std::vector<bool> flags(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    flags[static_cast<std::size_t>(i)] = w.row(i).cwiseAbs().maxCoeff() <= kZeroRowTol && std::abs(b(i)) <= bias_tol;
  return flags;
}

inline double logistic_bias_tol(const ConvexTrainConfig& cfg) { return std::max(kZeroRowTol, 10.0 * cfg.tol_grad); }

inline void validate(const ConvexTrainConfig& cfg) {
  require<ArgumentError>(cfg.rho >= 0.0, "rho must be non-negative");
  require<ArgumentError>(cfg.tol_grad > 0.0 && cfg.tol_feas > 0.0, "tolerances must be positive");
  require<ArgumentError>(cfg.max_iters >= 1, "max_iters must be positive");
}

// margin z_li = x_i (w_i' x_{-i} - b_i)
inline double margin(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, std::span<const std::int8_t> x, int i) {
  double f = -b(i);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    if (j != i) f += w(i, j) * x[j];
  return x[i] * f;
}

}  // namespace detail

/// (1/m) sum_l max(0, max_i (1 - z_li)) + rho ||W||_1 evaluated directly.
inline double simultaneous_hinge_objective(const InfluenceGame& g, const JointActionDataset& data, double rho) {
  double loss = 0.0;
  for (const auto& u : data.unique()) {
    double worst = 0.0;
    for (int i = 0; i < g.n(); ++i) worst = std::max(worst, 1.0 - detail::margin(g.weights(), g.thresholds(), u.action.view(), i));
    loss += static_cast<double>(u.count) * worst;
  }
  return loss / static_cast<double>(data.m()) + rho * g.weights().cwiseAbs().sum();
}

/// sum_i [(1/m) sum_l loss(z_li)] + rho ||W||_1 for the per-player hinge or logistic loss.
inline double independent_objective(const InfluenceGame& g, const JointActionDataset& data, double rho, bool hinge) {
  double loss = 0.0;
  for (const auto& u : data.unique())
    for (int i = 0; i < g.n(); ++i) {
      const double z = detail::margin(g.weights(), g.thresholds(), u.action.view(), i);
      loss += static_cast<double>(u.count) * (hinge ? std::max(0.0, 1.0 - z) : logistic_loss(z));
    }
  return loss / static_cast<double>(data.m()) + rho * g.weights().cwiseAbs().sum();
}

/// (1/m) sum_l log(1 + sum_i exp(-z_li)) + rho ||W||_1
inline double simultaneous_logistic_objective(const InfluenceGame& g, const JointActionDataset& data, double rho) {
  double loss = 0.0;
  std::vector<double> z(static_cast<std::size_t>(g.n()));
  for (const auto& u : data.unique()) {
    for (int i = 0; i < g.n(); ++i) z[i] = detail::margin(g.weights(), g.thresholds(), u.action.view(), i);
    loss += static_cast<double>(u.count) * simul_logistic_loss(z);
  }
  return loss / static_cast<double>(data.m()) + rho * g.weights().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Hinge losses as linear programs

namespace detail {

struct HingeSolution {
  Eigen::MatrixXd w;  // rows of the players in the block, full n columns
  Eigen::VectorXd b;
  double dual = 0.0;
  int pivots = 0;
};

// Block of players sharing one slack per sample (a single player gives the
// independent 1-norm SVM). Solves the dual packing LP over alpha_li >= 0:
//   max sum alpha  s.t.  |sum_l alpha_li x_i x_j| <= rho,  sum_l alpha_li x_i = 0,
//                        sum_{i in block} alpha_li <= count_l / m,
// whose row multipliers are (W+, W-, b+, b-, xi) of the primal.
inline HingeSolution solve_hinge_block(const JointActionDataset& data, std::span<const int> block, double rho) {
  const int n = data.n();
  const auto& unique = data.unique();
  const auto samples = static_cast<Eigen::Index>(unique.size());
  const auto k = static_cast<Eigen::Index>(block.size());
  const Eigen::Index weight_rows = 2 * k * (n - 1);
  const Eigen::Index bias_rows = 2 * k;
  const Eigen::Index rows = weight_rows + bias_rows + samples;
  const Eigen::Index cols = samples * k;
  require<CapacityError>(static_cast<double>(rows + 1) * static_cast<double>(cols + rows + 1) <= lp::kTableauCap,
                         "hinge LP too large for the dense simplex (n=" + std::to_string(n) +
                             ", unique samples=" + std::to_string(samples) + ")");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(rows);
  const double inv_m = 1.0 / static_cast<double>(data.m());
  for (Eigen::Index p = 0; p < k; ++p) {
    const int i = block[static_cast<std::size_t>(p)];
    for (Eigen::Index l = 0; l < samples; ++l) {
      const auto x = unique[static_cast<std::size_t>(l)].action.view();
      const Eigen::Index col = l * k + p;
      Eigen::Index slot = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double v = x[i] * x[j];
        a(2 * (p * (n - 1) + slot), col) = v;
        a(2 * (p * (n - 1) + slot) + 1, col) = -v;
        ++slot;
      }
      a(weight_rows + 2 * p, col) = -x[i];     // multiplier b+
      a(weight_rows + 2 * p + 1, col) = x[i];  // multiplier b-
      a(weight_rows + bias_rows + l, col) = 1.0;
    }
  }
  r.head(weight_rows).setConstant(rho);
  for (Eigen::Index l = 0; l < samples; ++l) r(weight_rows + bias_rows + l) = static_cast<double>(unique[static_cast<std::size_t>(l)].count) * inv_m;

  const auto sol = lp::solve_packing(a, r, Eigen::VectorXd::Ones(cols));
  HingeSolution out;
  out.w = Eigen::MatrixXd::Zero(k, n);
  out.b = Eigen::VectorXd::Zero(k);
  for (Eigen::Index p = 0; p < k; ++p) {
    const int i = block[static_cast<std::size_t>(p)];
    Eigen::Index slot = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Eigen::Index row = 2 * (p * (n - 1) + slot);
      out.w(p, j) = sol.y(row) - sol.y(row + 1);
      ++slot;
    }
    out.b(p) = sol.y(weight_rows + 2 * p) - sol.y(weight_rows + 2 * p + 1);
  }
  out.dual = sol.objective;
  out.pivots = sol.pivots;
  return out;
}

}  // namespace detail

/// Simultaneous 1-norm SVM: min (1/m) sum_l xi_l + rho ||W||_1 subject to
/// x_i (w_i' x_{-i} - b_i) >= 1 - xi_l, xi >= 0. The dual objective is kept as
/// the optimality certificate.
inline TrainResult train_simultaneous_hinge(const JointActionDataset& data, const ConvexTrainConfig& cfg) {
  detail::validate(cfg);
  const int n = data.n();
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[i] = i;
  auto sol = detail::solve_hinge_block(data, all, cfg.rho);
  for (int i = 0; i < n; ++i) sol.w(i, i) = 0.0;
  TrainResult res;
  res.game = InfluenceGame(sol.w, sol.b);
  res.objective = simultaneous_hinge_objective(res.game, data, cfg.rho);
  res.dual_objective = sol.dual;
  res.iterations = sol.pivots;
  res.residual = std::abs(res.objective - sol.dual) / (1.0 + std::abs(res.objective));
  if (res.residual > cfg.tol_feas)
    throw SolverError("simultaneous hinge duality gap " + std::to_string(res.residual) + " above tolerance (primal " +
                      std::to_string(res.objective) + ", dual " + std::to_string(sol.dual) + ")");
  res.per_player_degenerate = detail::zero_rows(res.game.weights(), res.game.thresholds());
  return res;
}

// ---------------------------------------------------------------------------
// Logistic losses: accelerated proximal gradient on (W, b)

namespace detail {

struct ProxResult {
  Eigen::VectorXd theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

using SmoothFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

// min f(theta) + rho * sum_{k in penalized} |theta_k| by FISTA with
// backtracking and gradient-based restart. The soft-threshold step is the
// projected step on the orthant split theta = theta+ - theta-.
inline ProxResult proximal_gradient(const SmoothFn& f, Eigen::VectorXd theta, const std::vector<bool>& penalized,
                                    double rho, int max_iters, double tol) {
  const Eigen::Index dim = theta.size();
  auto prox = [&](const Eigen::VectorXd& v, double step) {
    Eigen::VectorXd out = v;
    const double thr = rho * step;
    for (Eigen::Index k = 0; k < dim; ++k)
      if (penalized[static_cast<std::size_t>(k)]) {
        const double a = std::abs(v(k)) - thr;
        out(k) = a > 0.0 ? std::copysign(a, v(k)) : 0.0;
      }
    return out;
  };
  auto penalty = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k)
      if (penalized[static_cast<std::size_t>(k)]) s += std::abs(v(k));
    return rho * s;
  };
  auto stationarity = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& g) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      double r = std::abs(g(k));
      if (penalized[static_cast<std::size_t>(k)]) {
        r = v(k) != 0.0 ? std::abs(g(k) + std::copysign(rho, v(k))) : std::max(0.0, std::abs(g(k)) - rho);
      }
      worst = std::max(worst, r);
    }
    return worst;
  };

  ProxResult res;
  Eigen::VectorXd grad(dim), grad_y(dim);
  double fx = f(theta, &grad);
  res.residual = stationarity(theta, grad);
  if (!std::isfinite(fx)) throw NumericError("non-finite convex objective at the initial point");
  if (res.residual <= tol) {
    res.theta = theta;
    res.objective = fx + penalty(theta);
    res.converged = true;
    return res;
  }
  Eigen::VectorXd y = theta;
  double t = 1.0;
  double step = 1.0;
  for (int it = 1; it <= max_iters; ++it) {
    const double fy = f(y, &grad_y);
    Eigen::VectorXd next;
    double fnext = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      next = prox(y - step * grad_y, step);
      const Eigen::VectorXd d = next - y;
      fnext = f(next, nullptr);
      if (fnext <= fy + grad_y.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15 * std::abs(fy)) break;
      step *= 0.5;
    }
    if (!std::isfinite(fnext)) throw NumericError("non-finite convex objective during proximal gradient");
    const bool restart = (y - next).dot(next - theta) > 0.0;
    const double t_next = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = restart ? next : Eigen::VectorXd(next + ((t - 1.0) / t_next) * (next - theta));
    theta = std::move(next);
    t = t_next;
    step *= 1.1;
    res.iterations = it;
    if (it % 5 == 0 || it == max_iters) {
      fx = f(theta, &grad);
      res.residual = stationarity(theta, grad);
      if (res.residual <= tol) {
        res.converged = true;
        break;
      }
    }
  }
  res.objective = f(theta, nullptr) + penalty(theta);
  res.theta = std::move(theta);
  return res;
}

// theta layout for the full game: W row-major without the diagonal, then b.
inline Eigen::Index weight_slot(int n, int i, int j) { return static_cast<Eigen::Index>(i) * (n - 1) + (j < i ? j : j - 1); }

inline InfluenceGame unpack(int n, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (j != i) w(i, j) = theta(weight_slot(n, i, j));
    b(i) = theta(static_cast<Eigen::Index>(n) * (n - 1) + i);
  }
  return {std::move(w), std::move(b)};
}

inline Eigen::VectorXd random_start(Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  Eigen::VectorXd v(dim);
  for (Eigen::Index k = 0; k < dim; ++k) v(k) = u(rng);
  return v;
}

}  // namespace detail

/// Smooth part of the simultaneous logistic objective and its gradient over
/// the packed (W, b) vector.
inline double simultaneous_logistic_smooth(const JointActionDataset& data, const Eigen::VectorXd& theta,
                                           Eigen::VectorXd* grad) {
  const int n = data.n();
  const Eigen::Index wdim = static_cast<Eigen::Index>(n) * (n - 1);
  if (grad) grad->setZero(theta.size());
  std::vector<double> z(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n));
  const double inv_m = 1.0 / static_cast<double>(data.m());
  double total = 0.0;
  for (const auto& u : data.unique()) {
    const auto x = u.action.view();
    double shift = 0.0;
    for (int i = 0; i < n; ++i) {
      double f = -theta(wdim + i);
      for (int j = 0; j < n; ++j)
        if (j != i) f += theta(detail::weight_slot(n, i, j)) * x[j];
      z[i] = x[i] * f;
      shift = std::max(shift, -z[i]);
    }
    double s = std::exp(-shift);
    for (int i = 0; i < n; ++i) {
      e[i] = std::exp(-z[i] - shift);
      s += e[i];
    }
    const double weight = static_cast<double>(u.count) * inv_m;
    total += weight * (shift + std::log(s));
    if (!grad) continue;
    for (int i = 0; i < n; ++i) {
      const double g = -weight * e[i] / s;  // d loss / d z_i
      if (g == 0.0) continue;
      for (int j = 0; j < n; ++j)
        if (j != i) (*grad)(detail::weight_slot(n, i, j)) += g * x[i] * x[j];
      (*grad)(wdim + i) -= g * x[i];
    }
  }
  return total;
}

/// min (1/m) sum_l log(1 + sum_i exp(-z_li)) + rho ||W||_1
inline TrainResult train_simultaneous_logistic(const JointActionDataset& data, const ConvexTrainConfig& cfg) {
  detail::validate(cfg);
  const int n = data.n();
  const Eigen::Index wdim = static_cast<Eigen::Index>(n) * (n - 1);
  std::vector<bool> penalized(static_cast<std::size_t>(wdim + n), false);
  std::fill(penalized.begin(), penalized.begin() + wdim, true);
  auto f = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) { return simultaneous_logistic_smooth(data, th, g); };
  const auto pr = detail::proximal_gradient(f, detail::random_start(wdim + n, cfg.seed), penalized, cfg.rho,
                                            cfg.max_iters, cfg.tol_grad);
  TrainResult res;
  res.game = detail::unpack(n, pr.theta);
  res.objective = pr.objective;
  res.iterations = pr.iterations;
  res.converged = pr.converged;
  res.residual = pr.residual;
  res.per_player_degenerate = detail::zero_rows(res.game.weights(), res.game.thresholds(), detail::logistic_bias_tol(cfg));
  return res;
}

/// Independent 1-norm SVMs or L1-regularized logistic regressions, one per
/// player; b_i is never penalized.
inline TrainResult train_independent(const JointActionDataset& data, const ConvexTrainConfig& cfg) {
  detail::validate(cfg);
  detail::require<ArgumentError>(cfg.method == ConvexMethod::ind_svm || cfg.method == ConvexMethod::ind_logistic,
                                 "train_independent needs an independent method");
  const int n = data.n();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  TrainResult res;
  double dual_total = 0.0;
  const auto& unique = data.unique();
  const double inv_m = 1.0 / static_cast<double>(data.m());
  for (int i = 0; i < n; ++i) {
    if (cfg.method == ConvexMethod::ind_svm) {
      const int block[1] = {i};
      const auto sol = detail::solve_hinge_block(data, block, cfg.rho);
      w.row(i) = sol.w.row(0);
      w(i, i) = 0.0;
      b(i) = sol.b(0);
      dual_total += sol.dual;
      res.iterations += sol.pivots;
      continue;
    }
    // theta = (w_i without the diagonal slot, b_i)
    auto f = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
      if (g) g->setZero(th.size());
      double total = 0.0;
      for (const auto& u : unique) {
        const auto x = u.action.view();
        double fi = -th(n - 1);
        for (int j = 0, s = 0; j < n; ++j)
          if (j != i) fi += th(s++) * x[j];
        const double z = x[i] * fi;
        const double weight = static_cast<double>(u.count) * inv_m;
        total += weight * logistic_loss(z);
        if (!g) continue;
        const double dz = -weight / (1.0 + std::exp(z));
        for (int j = 0, s = 0; j < n; ++j)
          if (j != i) (*g)(s++) += dz * x[i] * x[j];
        (*g)(n - 1) -= dz * x[i];
      }
      return total;
    };
    std::vector<bool> penalized(static_cast<std::size_t>(n), true);
    penalized.back() = false;
    const auto pr = detail::proximal_gradient(f, detail::random_start(n, derive_seed(cfg.seed, static_cast<std::uint64_t>(i))),
                                              penalized, cfg.rho, cfg.max_iters, cfg.tol_grad);
    for (int j = 0, s = 0; j < n; ++j)
      if (j != i) w(i, j) = pr.theta(s++);
    b(i) = pr.theta(n - 1);
    res.iterations = std::max(res.iterations, pr.iterations);
    res.converged = res.converged && pr.converged;
    res.residual = std::max(res.residual, pr.residual);
  }
  res.game = InfluenceGame(std::move(w), std::move(b));
  const bool hinge = cfg.method == ConvexMethod::ind_svm;
  res.objective = independent_objective(res.game, data, cfg.rho, hinge);
  if (hinge) {
    res.dual_objective = dual_total;
    res.residual = std::abs(res.objective - dual_total) / (1.0 + std::abs(res.objective));
    if (res.residual > cfg.tol_feas)
      throw SolverError("independent hinge duality gap " + std::to_string(res.residual) + " above tolerance");
  }
  res.per_player_degenerate =
      detail::zero_rows(res.game.weights(), res.game.thresholds(), hinge ? kZeroRowTol : detail::logistic_bias_tol(cfg));
  return res;
}

inline TrainResult train_convex(const JointActionDataset& data, const ConvexTrainConfig& cfg) {
  switch (cfg.method) {
    case ConvexMethod::ind_svm:
    case ConvexMethod::ind_logistic: return train_independent(data, cfg);
    case ConvexMethod::sim_svm: return train_simultaneous_hinge(data, cfg);
    case ConvexMethod::sim_logistic: return train_simultaneous_logistic(data, cfg);
  }
  throw ArgumentError("unknown convex method");
}

// ---------------------------------------------------------------------------
// Degeneracy

/// Exact independent-case condition under which the zero row is optimal for
/// player i: every pairwise agreement count and the marginal count equal m/2.
inline bool detect_degenerate(const JointActionDataset& data, int player) {
  detail::require<ArgumentError>(player >= 0 && player < data.n(), "player index out of range");
  const auto m = data.m();
  if (m % 2 != 0) return false;
  const auto half = m / 2;
  std::size_t plus = 0;
  std::vector<std::size_t> agree(static_cast<std::size_t>(data.n()), 0);
  for (std::size_t l = 0; l < m; ++l) {
    const int xi = data.at(l, player);
    if (xi > 0) ++plus;
    for (int j = 0; j < data.n(); ++j)
      if (j != player && xi * data.at(l, j) > 0) ++agree[static_cast<std::size_t>(j)];
  }
  if (plus != half) return false;
  for (int j = 0; j < data.n(); ++j)
    if (j != player && agree[static_cast<std::size_t>(j)] != half) return false;
  return true;
}

/// Replaces each flagged all-zero row by the pure-bias rule b_i = +1 when the
/// player mostly chose -1 and b_i = -1 otherwise (ties included).
inline InfluenceGame fix_degenerate(const TrainResult& result, const JointActionDataset& data) {
  const auto& g = result.game;
  detail::require<ArgumentError>(g.n() == data.n(), "dimension mismatch between result and dataset");
  Eigen::MatrixXd w = g.weights();
  Eigen::VectorXd b = g.thresholds();
  for (int i = 0; i < g.n(); ++i) {
    const bool flagged = static_cast<std::size_t>(i) < result.per_player_degenerate.size() &&
                         result.per_player_degenerate[static_cast<std::size_t>(i)];
    if (!flagged) continue;
    long long sum = 0;
    for (std::size_t l = 0; l < data.m(); ++l) sum += data.at(l, i);
    w.row(i).setZero();
    b(i) = sum < 0 ? 1.0 : -1.0;
  }
  return {std::move(w), std::move(b)};
}

}  // namespace lig
