#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "lig/error.hpp"
#include "lig/game.hpp"
#include "lig/generative.hpp"
#include "lig/seed.hpp"

namespace lig {

struct EvalMetrics {
  double kl_to_truth = 0.0;  // nats
  bool kl_infinite = false;
  double precision = 1.0;
  double recall = 1.0;
  std::size_t ne_count = 0;
  double pi_hat = 0.0;
  double test_loglik = 0.0;
};

struct BoundReport {
  int n = 0;
  std::size_t m = 0;
  double delta = 0.0;
  double q_bar = 0.0;
  double bound_value = 0.0;  // slack subtracted from the optimal expected log-likelihood
  double vc_term = 0.0;      // n^3 log 2, the log of the VC-dimension bound
};

/// Largest n for which the exact model KL is evaluated.
inline constexpr int kModelKlCap = 20;
/// Reports show an infinite KL as this value, with a flag.
inline constexpr double kKlDisplayCap = 1e6;

/// sum_x p_truth(x) log(p_truth(x) / p_learned(x)), summed over the four
/// (in truth NE, in learned NE) classes; +inf when learned misses truth mass.
inline double model_kl_exact(const MixtureModel& truth, const MixtureModel& learned) {
  detail::require<ArgumentError>(truth.n() == learned.n(), "models have different player counts");
  detail::require<CapacityError>(truth.n() <= kModelKlCap, "exact model KL refused: n above 20");
  const auto [t_eq, t_non] = truth.level_probabilities();
  const auto [l_eq, l_non] = learned.level_probabilities();
  const double space = truth.equilibria().space_size();
  const auto& tn = truth.equilibria();
  const auto& ln = learned.equilibria();
  // trivial models put every action on the non-member level for this split
  const double t_size = truth.trivial() ? 0.0 : static_cast<double>(tn.size());
  const double l_size = learned.trivial() ? 0.0 : static_cast<double>(ln.size());
  const double t_in = truth.trivial() ? t_non : t_eq;
  const double l_in = learned.trivial() ? l_non : l_eq;
  const double both = (truth.trivial() || learned.trivial()) ? 0.0 : static_cast<double>(tn.intersection_size(ln));
  const double counts[4] = {both, t_size - both, l_size - both, space - t_size - l_size + both};
  const double p[4] = {t_in, t_in, t_non, t_non};
  const double r[4] = {l_in, l_non, l_in, l_non};
  double kl = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (counts[c] <= 0.0 || p[c] <= 0.0) continue;
    if (r[c] <= 0.0) return kInf;
    kl += counts[c] * p[c] * std::log(p[c] / r[c]);
  }
  return std::max(kl, 0.0);
}

/// (|L & T| / |L|, |L & T| / |T|) with empty-set conventions of 1.
inline std::pair<double, double> equilibrium_precision_recall(const EquilibriaSet& truth, const EquilibriaSet& learned) {
  detail::require<ArgumentError>(truth.n() == learned.n(), "sets have different player counts");
  const auto common = static_cast<double>(truth.intersection_size(learned));
  const double precision = learned.empty() ? 1.0 : common / static_cast<double>(learned.size());
  const double recall = truth.empty() ? 1.0 : common / static_cast<double>(truth.size());
  return {precision, recall};
}

/// (log max(2m, 1/(1-q_bar)) + n log 2) sqrt((2/m)(n^3 log 2 + log(4/delta)))
inline BoundReport generalization_bound(int n, std::size_t m, double delta, double q_bar) {
  detail::require<ArgumentError>(n >= 1 && m >= 1, "bound needs n >= 1 and m >= 1");
  detail::require<ArgumentError>(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  detail::require<ArgumentError>(q_bar > 0.0 && q_bar < 1.0, "q_bar must lie in (0,1)");
  BoundReport r;
  r.n = n;
  r.m = m;
  r.delta = delta;
  r.q_bar = q_bar;
  const double nd = n;
  const double md = static_cast<double>(m);
  r.vc_term = nd * nd * nd * kLn2;
  const double scale = std::log(std::max(2.0 * md, 1.0 / (1.0 - q_bar))) + nd * kLn2;
  r.bound_value = scale * std::sqrt((2.0 / md) * (r.vc_term + std::log(4.0 / delta)));
  return r;
}

/// (3/4)^n / delta: with probability at least 1 - delta, pi(G) is at most this.
inline double tpe_bound(int n, double delta) {
  detail::require<ArgumentError>(n >= 1, "n must be positive");
  detail::require<ArgumentError>(delta > 0.0 && delta <= 1.0, "delta must lie in (0,1]");
  return std::pow(0.75, n) / delta;
}

/// Largest n for the Monte Carlo estimate (exact pi per trial).
inline constexpr int kMonteCarloCap = 12;

struct MonteCarloPi {
  double mean = 0.0;
  double stddev = 0.0;     // sample standard deviation of pi across trials
  double std_error = 0.0;  // stddev / sqrt(trials)
  double ci_low = 0.0;     // 99% normal-approximation interval
  double ci_high = 0.0;
  std::vector<double> samples;
};

/// Game with i.i.d. standard-normal off-diagonal weights and thresholds.
inline InfluenceGame random_normal_game(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (j != i) w(i, j) = z(rng);
    b(i) = z(rng);
  }
  return {std::move(w), std::move(b)};
}

/// Mean true proportion of equilibria over random continuous games.
inline MonteCarloPi monte_carlo_expected_pi(int n, int trials, std::uint64_t seed) {
  detail::require<ArgumentError>(n >= 1 && trials >= 2, "Monte Carlo needs n >= 1 and at least 2 trials");
  detail::require<CapacityError>(n <= kMonteCarloCap, "Monte Carlo estimate refused: n above 12");
  MonteCarloPi r;
  r.samples.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t)
    r.samples.push_back(true_proportion(random_normal_game(n, derive_seed(seed, static_cast<std::uint64_t>(t))), 0.0));
  double sum = 0.0;
  for (double v : r.samples) sum += v;
  r.mean = sum / trials;
  double ss = 0.0;
  for (double v : r.samples) ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / (trials - 1));
  r.std_error = r.stddev / std::sqrt(static_cast<double>(trials));
  constexpr double z99 = 2.5758293035489004;
  r.ci_low = r.mean - z99 * r.std_error;
  r.ci_high = r.mean + z99 * r.std_error;
  return r;
}

struct InfluenceScores {
  Eigen::VectorXd influence;  // sum_i |w_ij| / (||w_i||_1 + |b_i|), per player j
  Eigen::VectorXd bias;       // |b_i| / (||w_i||_1 + |b_i|)
  Eigen::MatrixXd normalized;  // normalized |w_ij|
};

inline InfluenceScores influence_scores(const InfluenceGame& game) {
  const int n = game.n();
  InfluenceScores s;
  s.normalized = Eigen::MatrixXd::Zero(n, n);
  s.bias = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double norm = game.weights().row(i).cwiseAbs().sum() + std::abs(game.thresholds()(i));
    detail::require<ArgumentError>(norm > 0.0, "player " + std::to_string(i) +
                                                   " has an all-zero row; apply fix_degenerate first");
    s.normalized.row(i) = game.weights().row(i).cwiseAbs() / norm;
    s.bias(i) = std::abs(game.thresholds()(i)) / norm;
  }
  s.influence = s.normalized.colwise().sum().transpose();
  return s;
}

}  // namespace lig
