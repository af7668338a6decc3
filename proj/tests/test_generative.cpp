#include <gtest/gtest.h>

#include <random>

#include "lig/generative.hpp"
#include "oracles.hpp"

using namespace lig;

namespace {

InfluenceGame coordination2() {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  return {w, Eigen::VectorXd::Zero(2)};
}

// {(+1,+1) x3, (-1,-1) x2, (+1,-1) x1}; index 3 = (+,+), 0 = (-,-), 1 = (+,-)
JointActionDataset coordination_data() {
  const std::vector<ActionIndex> idx{3, 3, 3, 0, 0, 1};
  return JointActionDataset::from_indices(2, idx);
}

EquilibriaSet random_nontrivial_set(int n, std::mt19937_64& rng) {
  const ActionIndex space = ActionIndex{1} << n;
  std::uniform_int_distribution<ActionIndex> k_dist(1, space - 1);
  std::uniform_int_distribution<ActionIndex> x_dist(0, space - 1);
  const auto k = k_dist(rng);
  std::set<ActionIndex> s;
  while (s.size() < k) s.insert(x_dist(rng));
  return {n, std::vector<ActionIndex>(s.begin(), s.end())};
}

std::vector<ActionIndex> indices(const JointActionDataset& d) {
  std::vector<ActionIndex> out;
  for (std::size_t l = 0; l < d.m(); ++l) out.push_back(d.index(l));
  return out;
}

}  // namespace

TEST(Dataset, UniqueViewSortedByCountThenIndex) {
  const std::vector<ActionIndex> idx{2, 1, 2, 3, 1, 0};
  const auto d = JointActionDataset::from_indices(2, idx);
  const auto& u = d.unique();
  ASSERT_EQ(u.size(), 4u);
  EXPECT_EQ(u[0].action.index(), 1u);
  EXPECT_EQ(u[0].count, 2u);
  EXPECT_EQ(u[1].action.index(), 2u);
  EXPECT_EQ(u[2].action.index(), 0u);
  EXPECT_EQ(u[3].action.index(), 3u);
  std::size_t total = 0;
  for (const auto& e : u) total += e.count;
  EXPECT_EQ(total, d.m());
}

TEST(Dataset, RejectsInvalid) {
  EXPECT_THROW(JointActionDataset(2, std::vector<std::int8_t>{}), ArgumentError);
  EXPECT_THROW(JointActionDataset(2, std::vector<std::int8_t>{1, 1, 1}), ArgumentError);
  EXPECT_THROW(JointActionDataset(2, std::vector<std::int8_t>{1, 2}), ArgumentError);
}

TEST(MixtureModel, Invariants) {
  EXPECT_EQ(MixtureModel(EquilibriaSet(2, {}), 0.4).q(), 0.0);
  EXPECT_EQ(MixtureModel(EquilibriaSet(1, {0, 1}), 0.4).q(), 1.0);
  EXPECT_THROW(MixtureModel(EquilibriaSet(2, {0, 3}), 1.0), InvalidModelError);
  EXPECT_THROW(MixtureModel(EquilibriaSet(2, {0, 3}), 0.0), InvalidModelError);
  EXPECT_THROW(MixtureModel(EquilibriaSet(2, {0, 3}), 1.5), ArgumentError);
}

TEST(Pmf, TrivialGameIsUniform) {
  const MixtureModel m(InfluenceGame::zero(3), 0.5);
  for (ActionIndex x = 0; x < 8; ++x) EXPECT_DOUBLE_EQ(pmf(m, x), 0.125);
}

TEST(Pmf, TwoPlayerExample) {
  const MixtureModel m(coordination2(), 0.75);
  EXPECT_DOUBLE_EQ(pmf(m, JointAction::from_index(2, 3)), 0.375);
  EXPECT_DOUBLE_EQ(pmf(m, JointAction::from_index(2, 1)), 0.125);
}

TEST(Pmf, ThreePlayerExample) {
  const MixtureModel m(EquilibriaSet(3, {0, 7}), 0.5);
  EXPECT_DOUBLE_EQ(pmf(m, ActionIndex{0}), 0.25);
  EXPECT_NEAR(pmf(m, ActionIndex{1}), 0.5 / 6.0, 1e-15);
  EXPECT_GT(pmf(m, ActionIndex{0}), pmf(m, ActionIndex{1}));
}

TEST(Pmf, NormalizedOnRandomModels) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> uq(0.01, 0.99);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(t % 10);
    const MixtureModel m(random_nontrivial_set(n, rng), uq(rng));
    double total = 0.0;
    for (ActionIndex x = 0; x < (ActionIndex{1} << n); ++x) total += pmf(m, x);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Pmf, EquilibriaLikelierIffQAboveProportion) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> uq(0.01, 0.99);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + static_cast<int>(t % 6);
    const auto ne = random_nontrivial_set(n, rng);
    const double q = uq(rng);
    if (std::abs(q - ne.proportion()) < 1e-9) continue;
    const MixtureModel m(ne, q);
    const ActionIndex member = ne.members().front();
    ActionIndex outsider = 0;
    while (ne.contains(outsider)) ++outsider;
    EXPECT_EQ(q > ne.proportion(), pmf(m, member) > pmf(m, outsider));
  }
}

TEST(Pmf, IdentifiabilityBySets) {
  // different games, same equilibria: identical PMFs
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(3, 3);
  w2(0, 1) = w2(1, 0) = w2(1, 2) = w2(2, 1) = 2.0;
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(3, 3);
  w1(1, 0) = 0.5;
  w1(2, 1) = 1.0;
  w1(0, 2) = 1.0;
  const MixtureModel a(InfluenceGame(w1, Eigen::VectorXd::Zero(3)), 0.6);
  const MixtureModel b(InfluenceGame(w2, Eigen::VectorXd::Zero(3)), 0.6);
  ASSERT_EQ(a.equilibria(), b.equilibria());
  for (ActionIndex x = 0; x < 8; ++x) EXPECT_DOUBLE_EQ(pmf(a, x), pmf(b, x));
  // different sets: some action differs
  const MixtureModel c(EquilibriaSet(3, {0, 6}), 0.6);
  bool differs = false;
  for (ActionIndex x = 0; x < 8; ++x) differs = differs || pmf(a, x) != pmf(c, x);
  EXPECT_TRUE(differs);
}

TEST(Sample, QOneStaysInEquilibria) {
  const MixtureModel m(EquilibriaSet(3, {2, 5}), 0.999999999);
  const auto d = sample(m, 3, 500);
  for (std::size_t l = 0; l < d.m(); ++l) {
    const auto x = d.index(l);
    EXPECT_TRUE(x == 2 || x == 5);
  }
}

TEST(Sample, EmpiricalFractionConcentrates) {
  const MixtureModel m(EquilibriaSet(4, {0, 3, 12, 15}), 0.7);
  const auto d = sample(m, 2024, 10000);
  EXPECT_NEAR(empirical_proportion(m.equilibria(), d), 0.7, 0.02);
}

TEST(Sample, ComplementIsUniform) {
  // chi-square style check: every non-member drawn with frequency near (1-q)/(2^n - k)
  const MixtureModel m(EquilibriaSet(3, {1, 6}), 0.2);
  const auto d = sample(m, 99, 60000);
  std::vector<double> freq(8, 0.0);
  for (std::size_t l = 0; l < d.m(); ++l) freq[d.index(l)] += 1.0 / 60000.0;
  for (ActionIndex x = 0; x < 8; ++x) EXPECT_NEAR(freq[x], oracle::pmf(3, {1, 6}, 0.2, x), 0.008);
}

TEST(Sample, DeterministicPerSeed) {
  const MixtureModel m(EquilibriaSet(5, {1, 2, 30}), 0.6);
  EXPECT_EQ(indices(sample(m, 7, 300)), indices(sample(m, 7, 300)));
  EXPECT_NE(indices(sample(m, 7, 300)), indices(sample(m, 8, 300)));
}

TEST(EmpiricalProportion, Examples) {
  const auto d = coordination_data();
  EXPECT_DOUBLE_EQ(empirical_proportion(coordination2(), d), 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(empirical_proportion(InfluenceGame::zero(2), d), 1.0);
  EXPECT_DOUBLE_EQ(empirical_proportion(EquilibriaSet(2, {}), d), 0.0);
}

TEST(KlBernoulli, Examples) {
  for (double p : {0.0, 0.2, 0.5, 1.0}) EXPECT_DOUBLE_EQ(kl_bernoulli(p, p), 0.0);
  EXPECT_NEAR(kl_bernoulli(0.75, 0.5), 0.75 * std::log(1.5) + 0.25 * std::log(0.5), 1e-15);
  EXPECT_NEAR(kl_bernoulli(0.75, 0.5), 0.130812, 1e-6);
  EXPECT_NEAR(kl_bernoulli(1.0, 0.5), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isinf(kl_bernoulli(0.5, 0.0)));
  EXPECT_TRUE(std::isinf(kl_bernoulli(0.5, 1.0)));
}

TEST(AvgLogLikelihood, Examples) {
  const auto d = coordination_data();
  EXPECT_NEAR(avg_log_likelihood(coordination2(), 5.0 / 6.0, d), -1.143708, 1e-6);
  const std::vector<ActionIndex> four{3, 3, 0, 1};
  EXPECT_NEAR(avg_log_likelihood(coordination2(), 0.75, JointActionDataset::from_indices(2, four)), -1.255482, 1e-6);
  EXPECT_NEAR(avg_log_likelihood(coordination2(), 0.75, JointActionDataset::from_indices(2, four)),
              0.75 * std::log(0.375) + 0.25 * std::log(0.125), 1e-12);
}

TEST(AvgLogLikelihood, TrivialGameIsUniform) {
  const auto d = coordination_data();
  EXPECT_EQ(avg_log_likelihood(InfluenceGame::zero(2), 0.3, d), -2.0 * std::log(2.0));
  EXPECT_EQ(avg_log_likelihood(EquilibriaSet(2, {}), 0.0, d), -2.0 * std::log(2.0));
}

TEST(AvgLogLikelihood, MatchingProportionsGiveUniformValue) {
  // pi_hat = pi = q = 1/2
  const std::vector<ActionIndex> idx{3, 1};
  EXPECT_NEAR(avg_log_likelihood(coordination2(), 0.5, JointActionDataset::from_indices(2, idx)), -2.0 * std::log(2.0),
              1e-15);
}

TEST(AvgLogLikelihood, EqualsDirectPmfAverage) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> uq(0.01, 0.99);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(t % 8);
    const auto ne = random_nontrivial_set(n, rng);
    const double q = uq(rng);
    const auto d = sample(MixtureModel(ne, uq(rng)), rng(), 1 + rng() % 40);
    const std::set<ActionIndex> s(ne.members().begin(), ne.members().end());
    EXPECT_NEAR(avg_log_likelihood(ne, q, d), oracle::avg_log_pmf(n, s, q, indices(d)), 1e-10);
  }
}

TEST(OptimalQ, Examples) {
  EXPECT_DOUBLE_EQ(optimal_q(1.0, 50), 0.99);
  EXPECT_DOUBLE_EQ(optimal_q(0.75, 4), 0.75);
  EXPECT_DOUBLE_EQ(optimal_q(0.9, 5), 0.9);
}

TEST(OptimalQ, MaximizesLikelihoodOverGrid) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(t % 5);
    const auto ne = random_nontrivial_set(n, rng);
    const auto d = sample(MixtureModel(ne, 0.8), rng(), 30);
    const double pi_hat = empirical_proportion(ne, d);
    const double best = avg_log_likelihood(ne, std::max(optimal_q(pi_hat, d.m()), 1e-12), d);
    for (int k = 1; k < 100; ++k) EXPECT_GE(best + 1e-12, avg_log_likelihood(ne, k / 100.0, d));
  }
}

TEST(KlBounds, Examples) {
  const auto b = kl_bounds(0.75, 0.25);
  EXPECT_NEAR(b.lower, 0.346574, 1e-6);
  EXPECT_NEAR(b.upper, 1.039721, 1e-6);
  const double kl = kl_bernoulli(0.75, 0.25);
  EXPECT_NEAR(kl, 0.549306, 1e-6);
  EXPECT_LT(b.lower, kl);
  EXPECT_LT(kl, b.upper);
  EXPECT_NEAR(kl_bounds(1.0, std::ldexp(1.0, -7)).upper, 7 * std::log(2.0), 1e-12);
  const double pi = std::pow(0.75, 9);
  const auto c = kl_bounds(0.9, pi);
  EXPECT_LT(c.lower, kl_bernoulli(0.9, pi));
  EXPECT_LT(kl_bernoulli(0.9, pi), c.upper);
  EXPECT_THROW(kl_bounds(0.2, 0.3), ArgumentError);
}

TEST(KlBounds, StrictOnGrid) {
  // interior pi_hat; at pi_hat = 1 the upper bound is attained (checked below)
  for (int a = 1; a <= 50; ++a)
    for (int c = 1; c <= 50; ++c) {
      const double pi_hat = a / 51.0;
      const double pi = pi_hat * c / 51.0;
      const auto b = kl_bounds(pi_hat, pi);
      const double kl = oracle::bernoulli_kl(pi_hat, pi);
      EXPECT_LT(b.lower, kl);
      EXPECT_LT(kl, b.upper);
    }
}

TEST(KlBounds, UpperAttainedAtPiHatOne) {
  for (int n = 1; n <= 20; ++n) {
    const double pi = std::ldexp(1.0, -n);
    EXPECT_NEAR(kl_bernoulli(1.0, pi), kl_bounds(1.0, pi).upper, 1e-12);
  }
}
