#include <gtest/gtest.h>

#include <random>

#include "lig/analysis.hpp"
#include "lig/convex.hpp"
#include "oracles.hpp"

using namespace lig;

namespace {

constexpr std::array<ConvexMethod, 4> kMethods = {ConvexMethod::ind_svm, ConvexMethod::sim_svm, ConvexMethod::ind_logistic,
                                                  ConvexMethod::sim_logistic};

InfluenceGame coordination2() {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  return {w, Eigen::VectorXd::Zero(2)};
}

ConvexTrainConfig config(ConvexMethod m, double rho, std::uint64_t seed = 0) {
  ConvexTrainConfig cfg;
  cfg.method = m;
  cfg.rho = rho;
  cfg.seed = seed;
  return cfg;
}

double naive_simul(const std::vector<double>& z) {
  double s = 1.0;
  for (double v : z) s += std::exp(-v);
  return std::log(s);
}

double w_norm(const InfluenceGame& g) { return g.weights().cwiseAbs().sum(); }

}  // namespace

TEST(Losses, LogisticExamples) {
  EXPECT_NEAR(logistic_loss(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(logistic_loss(2.0), std::log1p(std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(logistic_loss(-800.0), 800.0, 1e-9);
  EXPECT_NEAR(logistic_loss(800.0), 0.0, 1e-300);
}

TEST(Losses, SimultaneousLogisticExamples) {
  EXPECT_NEAR(simul_logistic_loss(std::vector<double>{0.0, 0.0}), std::log(3.0), 1e-15);
  EXPECT_NEAR(simul_logistic_loss(std::vector<double>{0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(simul_logistic_loss(std::vector<double>{-1000.0, 5.0}), 1000.0, 1e-9);
  EXPECT_TRUE(std::isfinite(simul_logistic_loss(std::vector<double>{-1e5, -1e5})));
  EXPECT_NEAR(simul_logistic_loss(std::vector<double>{1000.0, 1000.0}), 0.0, 1e-300);
}

TEST(Losses, SimultaneousLogisticSandwich) {
  // max_i loss(z_i) <= simultaneous loss <= sum_i loss(z_i); it is at least
  // log 2 whenever some margin is non-positive
  std::mt19937_64 rng(101);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(1 + t % 9);
    for (auto& x : v) x = z(rng);
    const double s = simul_logistic_loss(v);
    EXPECT_NEAR(s, naive_simul(v), 1e-10);
    double mx = 0.0, sum = 0.0, mn = 1e300;
    for (double x : v) {
      mx = std::max(mx, logistic_loss(x));
      sum += logistic_loss(x);
      mn = std::min(mn, x);
    }
    EXPECT_GE(s, mx - 1e-12);
    EXPECT_LE(s, sum + 1e-12);
    if (mn <= 0.0) EXPECT_GE(s, std::log(2.0) - 1e-12);
  }
}

TEST(SimultaneousLogistic, SmoothPartGradient) {
  std::mt19937_64 rng(103);
  std::normal_distribution<double> z(0.0, 0.7);
  for (int t = 0; t < 10; ++t) {
    const int n = 2 + t % 4;
    const auto d = sample(MixtureModel::uniform(n), rng(), 25);
    Eigen::VectorXd th(n * (n - 1) + n);
    for (Eigen::Index k = 0; k < th.size(); ++k) th(k) = z(rng);
    Eigen::VectorXd g;
    const double f = simultaneous_logistic_smooth(d, th, &g);
    EXPECT_NEAR(f, simultaneous_logistic_objective(detail::unpack(n, th), d, 0.0), 1e-12);
    for (Eigen::Index k = 0; k < th.size(); ++k) {
      auto p = th, m = th;
      p(k) += 1e-6;
      m(k) -= 1e-6;
      const double fd = (simultaneous_logistic_smooth(d, p, nullptr) - simultaneous_logistic_smooth(d, m, nullptr)) / 2e-6;
      EXPECT_NEAR(g(k), fd, 1e-7);
    }
  }
}

TEST(Hinge, DualityGapAndRandomCandidates) {
  std::mt19937_64 rng(107);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int t = 0; t < 12; ++t) {
    const int n = 3 + t % 3;
    const auto d = sample(MixtureModel(EquilibriaSet(n, {0, (ActionIndex{1} << n) - 1}), 0.7), rng(), 30);
    const double rho = (t % 4) * 0.02;
    const auto sim = train_simultaneous_hinge(d, config(ConvexMethod::sim_svm, rho));
    const auto ind = train_independent(d, config(ConvexMethod::ind_svm, rho));
    ASSERT_TRUE(sim.dual_objective && ind.dual_objective);
    EXPECT_NEAR(sim.objective, *sim.dual_objective, 1e-7);
    EXPECT_NEAR(ind.objective, *ind.dual_objective, 1e-7);
    // slack elimination: the LP value equals the directly evaluated piecewise-linear objective
    EXPECT_NEAR(sim.objective, simultaneous_hinge_objective(sim.game, d, rho), 1e-12);
    EXPECT_LE(sim.objective, 1.0 + 1e-9);  // the zero game costs exactly 1
    for (int k = 0; k < 200; ++k) {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
          if (i != j) w(i, j) = sim.game.weights()(i, j) + 0.3 * z(rng);
        b(i) = sim.game.thresholds()(i) + 0.3 * z(rng);
      }
      const InfluenceGame cand(w, b);
      EXPECT_GE(simultaneous_hinge_objective(cand, d, rho), sim.objective - 1e-9);
      EXPECT_GE(independent_objective(cand, d, rho, true), ind.objective - 1e-9);
    }
  }
}

TEST(Logistic, StationaryAgainstRandomCandidates) {
  std::mt19937_64 rng(109);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto d = sample(MixtureModel(EquilibriaSet(4, {0, 15, 3}), 0.6), 109, 40);
  for (auto m : {ConvexMethod::ind_logistic, ConvexMethod::sim_logistic}) {
    const auto r = train_convex(d, config(m, 0.01));
    EXPECT_TRUE(r.converged);
    const bool sim = m == ConvexMethod::sim_logistic;
    for (int k = 0; k < 200; ++k) {
      Eigen::MatrixXd w = r.game.weights();
      Eigen::VectorXd b = r.game.thresholds();
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j)
          if (i != j) w(i, j) += 0.05 * z(rng);
        b(i) += 0.05 * z(rng);
      }
      const InfluenceGame cand(w, b);
      const double cand_obj = sim ? simultaneous_logistic_objective(cand, d, 0.01) : independent_objective(cand, d, 0.01, false);
      EXPECT_GE(cand_obj, r.objective - 1e-8);
    }
  }
}

TEST(ConvexTrainers, AllPlusData) {
  const std::vector<ActionIndex> idx(20, 7);
  const auto d = JointActionDataset::from_indices(3, idx);
  for (auto m : kMethods) {
    const auto r = train_convex(d, config(m, 0.0));
    EXPECT_TRUE(enumerate_equilibria(r.game).contains(ActionIndex{7})) << to_string(m);
  }
  EXPECT_NEAR(train_convex(d, config(ConvexMethod::sim_svm, 0.0)).objective, 0.0, 1e-9);
  EXPECT_NEAR(train_convex(d, config(ConvexMethod::ind_svm, 0.0)).objective, 0.0, 1e-9);
}

TEST(ConvexTrainers, SeparableDataAtZeroRho) {
  const std::vector<ActionIndex> idx{0, 7, 7, 0, 7, 0, 0, 7};
  const auto d = JointActionDataset::from_indices(3, idx);
  for (auto m : kMethods) {
    const auto r = train_convex(d, config(m, 0.0));
    const auto ne = enumerate_equilibria(r.game);
    EXPECT_TRUE(ne.contains(ActionIndex{0}) && ne.contains(ActionIndex{7})) << to_string(m);
  }
  EXPECT_NEAR(train_convex(d, config(ConvexMethod::sim_svm, 0.0)).objective, 0.0, 1e-9);
}

TEST(ConvexTrainers, SeedsAgree) {
  const auto d = sample(MixtureModel(EquilibriaSet(4, {0, 15, 5}), 0.7), 113, 50);
  for (auto m : {ConvexMethod::ind_logistic, ConvexMethod::sim_logistic}) {
    const auto a = train_convex(d, config(m, 0.01, 1));
    const auto b = train_convex(d, config(m, 0.01, 2));
    EXPECT_NEAR(a.objective, b.objective, 1e-6);
    EXPECT_LT((a.game.weights() - b.game.weights()).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(ConvexTrainers, IndependentRecoverCoordination) {
  const auto d = sample(MixtureModel(coordination2(), 0.9), 127, 200);
  for (auto m : kMethods) {
    const auto r = train_convex(d, config(m, 0.001));
    EXPECT_EQ(enumerate_equilibria(r.game).members(), (std::vector<ActionIndex>{0, 3})) << to_string(m);
  }
}

TEST(ConvexTrainers, DiagonalZeroAndRhoMonotone) {
  const auto d = sample(MixtureModel(EquilibriaSet(4, {0, 15, 9}), 0.7), 131, 40);
  for (auto m : kMethods) {
    double prev = 1e300;
    for (double rho : {0.0, 0.001, 0.01, 0.05, 0.1, 0.5}) {
      const auto r = train_convex(d, config(m, rho));
      for (int i = 0; i < 4; ++i) EXPECT_EQ(r.game.weights()(i, i), 0.0);
      EXPECT_LE(w_norm(r.game), prev + 1e-4) << to_string(m) << " rho=" << rho;
      prev = w_norm(r.game);
    }
  }
}

TEST(ConvexTrainers, RejectsBadConfig) {
  const auto d = JointActionDataset::from_indices(2, std::vector<ActionIndex>{0, 3});
  EXPECT_THROW(train_convex(d, config(ConvexMethod::sim_logistic, -1.0)), ArgumentError);
  EXPECT_THROW(train_independent(d, config(ConvexMethod::sim_svm, 0.0)), ArgumentError);
}

TEST(Degeneracy, BalancedDataIsDetected) {
  const auto d = JointActionDataset::from_indices(2, std::vector<ActionIndex>{0, 1, 2, 3});
  EXPECT_TRUE(detect_degenerate(d, 0));
  EXPECT_TRUE(detect_degenerate(d, 1));
  const auto odd = JointActionDataset::from_indices(2, std::vector<ActionIndex>{0, 1, 2, 3, 3});
  EXPECT_FALSE(detect_degenerate(odd, 0));
  const auto coupled = JointActionDataset::from_indices(2, std::vector<ActionIndex>{0, 3, 0, 3});
  EXPECT_FALSE(detect_degenerate(coupled, 0));
  EXPECT_THROW(detect_degenerate(d, 2), ArgumentError);
}

TEST(Degeneracy, DetectionMatchesZeroLogisticRow) {
  const auto d = JointActionDataset::from_indices(3, std::vector<ActionIndex>{0, 1, 2, 3, 4, 5, 6, 7});
  const auto r = train_convex(d, config(ConvexMethod::ind_logistic, 0.0));
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(detect_degenerate(d, i));
    EXPECT_TRUE(r.per_player_degenerate[i]);
  }
}

TEST(Degeneracy, LargeRhoZeroesWeights) {
  const auto d = sample(MixtureModel(EquilibriaSet(3, {0, 7}), 0.8), 137, 40);
  for (auto m : kMethods) EXPECT_LT(w_norm(train_convex(d, config(m, 10.0)).game), 1e-9) << to_string(m);
  const auto bal = JointActionDataset::from_indices(3, std::vector<ActionIndex>{0, 1, 2, 3, 4, 5, 6, 7});
  for (auto m : {ConvexMethod::ind_logistic, ConvexMethod::sim_logistic}) {
    const auto r = train_convex(bal, config(m, 10.0));
    for (int i = 0; i < 3; ++i) EXPECT_TRUE(r.per_player_degenerate[i]) << to_string(m);
  }
}

TEST(Degeneracy, FixRule) {
  // player 0: 7 of 10 play +1; player 1: 3 of 10; player 2: 5 of 10
  std::vector<std::int8_t> flat;
  for (int l = 0; l < 10; ++l) {
    flat.push_back(l < 7 ? 1 : -1);
    flat.push_back(l < 3 ? 1 : -1);
    flat.push_back(l < 5 ? 1 : -1);
  }
  const JointActionDataset d(3, flat);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 1) = 1e-10;
  w(2, 0) = 0.5;
  TrainResult r;
  r.game = InfluenceGame(w, Eigen::VectorXd::Zero(3));
  r.per_player_degenerate = {true, true, false};
  const auto g = fix_degenerate(r, d);
  EXPECT_EQ(g.thresholds()(0), -1.0);
  EXPECT_EQ(g.thresholds()(1), 1.0);
  EXPECT_EQ(g.thresholds()(2), 0.0);
  EXPECT_EQ(g.weights()(0, 1), 0.0);
  EXPECT_EQ(g.weights()(2, 0), 0.5);
  // the fixed player's best response is its majority action
  const auto fixed_ne = enumerate_equilibria(g);
  ASSERT_FALSE(fixed_ne.empty());
  for (auto x : fixed_ne.members()) {
    EXPECT_EQ(action_at(x, 0), 1);
    EXPECT_EQ(action_at(x, 1), -1);
  }
  r.per_player_degenerate = {false, false, true};
  EXPECT_EQ(fix_degenerate(r, d).thresholds()(2), -1.0);  // ties choose -1
}

TEST(ConvexTrainers, SimultaneousLogisticAtLeastIndependentOnAverage) {
  double sim_score = 0.0, ind_score = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    std::mt19937_64 rng(derive_seed(139, s));
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(9, 9);
    std::bernoulli_distribution edge(0.5), plus(0.5);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        if (i != j && edge(rng)) w(i, j) = plus(rng) ? 1.0 : -1.0;
    const InfluenceGame truth(w, Eigen::VectorXd::Zero(9));
    const auto ne = enumerate_equilibria(truth);
    if (ne.empty() || ne.trivial()) continue;
    const auto d = sample(MixtureModel(ne, 0.9), derive_seed(141, s), 50);
    for (auto m : {ConvexMethod::sim_logistic, ConvexMethod::ind_logistic}) {
      const auto r = train_convex(d, config(m, 0.0006));
      const auto [p, rc] = equilibrium_precision_recall(ne, enumerate_equilibria(fix_degenerate(r, d)));
      (m == ConvexMethod::sim_logistic ? sim_score : ind_score) += p + rc;
    }
  }
  EXPECT_GE(sim_score, ind_score - 1e-12);
}
