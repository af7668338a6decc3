#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/game.hpp"

namespace lig {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline const double kLn2 = std::log(2.0);

/// Mixture of the uniform distribution over NE(G) (weight q) and the uniform
/// distribution over its complement (weight 1 - q).
class MixtureModel {
 public:
  /// Trivial sets (|NE| in {0, 2^n}) induce the uniform PMF; q is coerced to
  /// 0 or 1 respectively. Non-trivial sets need 0 < q < 1.
  MixtureModel(EquilibriaSet ne, double q) : ne_(std::move(ne)), q_(q) {
    detail::require<ArgumentError>(q >= 0.0 && q <= 1.0, "mixture parameter q must lie in [0,1]");
    if (ne_.empty()) q_ = 0.0;
    else if (ne_.trivial()) q_ = 1.0;
    else
      detail::require<InvalidModelError>(q > 0.0 && q < 1.0,
                                         "q in {0,1} with a non-trivial game does not define a valid PMF");
  }

  MixtureModel(const InfluenceGame& game, double q, double tol = kDefaultTol)
      : MixtureModel(enumerate_equilibria(game, tol), q) {}

  static MixtureModel uniform(int n) { return {EquilibriaSet(n, {}), 0.0}; }

  int n() const { return ne_.n(); }
  double q() const { return q_; }
  const EquilibriaSet& equilibria() const { return ne_; }
  bool trivial() const { return ne_.trivial(); }
  double proportion() const { return ne_.proportion(); }

  /// Probability of any single equilibrium and of any single non-equilibrium.
  std::pair<double, double> level_probabilities() const {
    if (trivial()) {
      const double u = std::ldexp(1.0, -n());
      return {u, u};
    }
    const double k = static_cast<double>(ne_.size());
    return {q_ / k, (1.0 - q_) / (ne_.space_size() - k)};
  }

 private:
  EquilibriaSet ne_;
  double q_;
};

inline double pmf(const MixtureModel& model, ActionIndex x) {
  auto [p_eq, p_non] = model.level_probabilities();
  return model.equilibria().contains(x) ? p_eq : p_non;
}

inline double pmf(const MixtureModel& model, const JointAction& x) {
  detail::require<ArgumentError>(x.size() == model.n(), "joint action length does not match model");
  return pmf(model, x.index());
}

namespace detail {

// r-th (0-based) index of {0..2^n-1} not in the sorted set.
inline ActionIndex nth_non_member(const std::vector<ActionIndex>& sorted, ActionIndex r, ActionIndex space) {
  ActionIndex lo = r, hi = space - 1;
  while (lo < hi) {
    const ActionIndex mid = lo + (hi - lo) / 2;
    const auto members_le =
        static_cast<ActionIndex>(std::upper_bound(sorted.begin(), sorted.end(), mid) - sorted.begin());
    if (mid + 1 - members_le >= r + 1) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

}  // namespace detail

/// m i.i.d. draws from the mixture; deterministic for a given seed.
inline JointActionDataset sample(const MixtureModel& model, std::uint64_t seed, std::size_t m) {
  detail::require<ArgumentError>(m >= 1, "sample size must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& ne = model.equilibria().members();
  const ActionIndex space = ActionIndex{1} << model.n();
  const auto non_count = space - static_cast<ActionIndex>(ne.size());
  std::vector<ActionIndex> draws;
  draws.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    const bool from_ne = model.trivial() ? !ne.empty() : unit(rng) < model.q();
    if (from_ne) {
      std::uniform_int_distribution<std::size_t> pick(0, ne.size() - 1);
      draws.push_back(ne[pick(rng)]);
    } else {
      std::uniform_int_distribution<ActionIndex> pick(0, non_count - 1);
      draws.push_back(detail::nth_non_member(ne, pick(rng), space));
    }
  }
  return JointActionDataset::from_indices(model.n(), draws);
}

/// (1/m) sum_l [x^(l) in NE]
inline double empirical_proportion(const EquilibriaSet& ne, const JointActionDataset& data) {
  detail::require<ArgumentError>(ne.n() == data.n(), "dimension mismatch between game and dataset");
  std::size_t hits = 0;
  for (const auto& u : data.unique())
    if (ne.contains(u.action.index())) hits += u.count;
  return static_cast<double>(hits) / static_cast<double>(data.m());
}

inline double empirical_proportion(const InfluenceGame& game, const JointActionDataset& data,
                                   double tol = kDefaultTol) {
  detail::require<ArgumentError>(game.n() == data.n(), "dimension mismatch between game and dataset");
  std::size_t hits = 0;
  for (const auto& u : data.unique())
    if (is_equilibrium(game, u.action, tol)) hits += u.count;
  return static_cast<double>(hits) / static_cast<double>(data.m());
}

/// KL(Bernoulli(p1) || Bernoulli(p2)) in nats, 0 log 0 = 0, +inf when unbounded.
inline double kl_bernoulli(double p1, double p2) {
  detail::require<ArgumentError>(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0,
                                 "Bernoulli parameters must lie in [0,1]");
  auto term = [](double a, double b) -> double {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return kInf;
    return a * std::log(a / b);
  };
  return term(p1, p2) + term(1.0 - p1, 1.0 - p2);
}

/// KL(pi_hat || pi) - KL(pi_hat || q) - n log 2; trivial pi in {0,1} gives the
/// uniform value -n log 2.
inline double log_likelihood_from_proportions(double pi_hat, double pi, double q, int n) {
  if (pi <= 0.0 || pi >= 1.0) return -n * kLn2;
  return kl_bernoulli(pi_hat, pi) - kl_bernoulli(pi_hat, q) - n * kLn2;
}

inline double avg_log_likelihood(const EquilibriaSet& ne, double q, const JointActionDataset& data) {
  detail::require<ArgumentError>(q >= 0.0 && q <= 1.0, "mixture parameter q must lie in [0,1]");
  if (ne.trivial()) return -data.n() * kLn2;
  return log_likelihood_from_proportions(empirical_proportion(ne, data), ne.proportion(), q, data.n());
}

inline double avg_log_likelihood(const InfluenceGame& game, double q, const JointActionDataset& data,
                                 double tol = kDefaultTol) {
  detail::require<ArgumentError>(game.n() == data.n(), "dimension mismatch between game and dataset");
  return avg_log_likelihood(enumerate_equilibria(game, tol), q, data);
}

/// min(pi_hat, 1 - 1/(2m))
inline double optimal_q(double pi_hat, std::size_t m) {
  detail::require<ArgumentError>(m >= 1, "m must be at least 1");
  detail::require<ArgumentError>(pi_hat >= 0.0 && pi_hat <= 1.0, "pi_hat must lie in [0,1]");
  return std::min(pi_hat, 1.0 - 1.0 / (2.0 * static_cast<double>(m)));
}

/// Average log-likelihood at the closed-form optimal mixture parameter.
inline double log_likelihood_at_optimal_q(double pi_hat, double pi, std::size_t m, int n) {
  return log_likelihood_from_proportions(pi_hat, pi, optimal_q(pi_hat, m), n);
}

struct KlBounds {
  double lower;
  double upper;
};

/// (-pi_hat log pi - log 2, -pi_hat log pi), bracketing KL(pi_hat || pi) when 0 < pi < pi_hat.
inline KlBounds kl_bounds(double pi_hat, double pi) {
  detail::require<ArgumentError>(pi > 0.0 && pi < pi_hat && pi_hat <= 1.0,
                                 "KL bounds need 0 < pi < pi_hat <= 1");
  const double upper = -pi_hat * std::log(pi);
  return {upper - kLn2, upper};
}

}  // namespace lig
