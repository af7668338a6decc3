#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lig/analysis.hpp"
#include "lig/convex.hpp"
#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/exact.hpp"
#include "lig/game.hpp"
#include "lig/generative.hpp"
#include "lig/io.hpp"
#include "lig/seed.hpp"
#include "lig/smooth.hpp"

namespace lig {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Methods

enum class Method { sample_picking, exhaustive, sigmoid_ml, sigmoid_mepe, ind_svm, sim_svm, ind_logistic, sim_logistic };

inline constexpr std::array<Method, 8> kAllMethods = {Method::sample_picking, Method::exhaustive,  Method::sigmoid_ml,
                                                      Method::sigmoid_mepe,   Method::ind_svm,     Method::sim_svm,
                                                      Method::ind_logistic,   Method::sim_logistic};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::sample_picking: return "sample_picking";
    case Method::exhaustive: return "exhaustive";
    case Method::sigmoid_ml: return "sigmoid_ml";
    case Method::sigmoid_mepe: return "sigmoid_mepe";
    case Method::ind_svm: return "ind_svm";
    case Method::sim_svm: return "sim_svm";
    case Method::ind_logistic: return "ind_logistic";
    case Method::sim_logistic: return "sim_logistic";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (auto m : kAllMethods)
    if (to_string(m) == s) return m;
  throw ArgumentError("unknown method '" + s + "'");
}

inline bool uses_rho(Method m) { return m != Method::sample_picking && m != Method::exhaustive; }

inline std::optional<ConvexMethod> convex_method(Method m) {
  switch (m) {
    case Method::ind_svm: return ConvexMethod::ind_svm;
    case Method::sim_svm: return ConvexMethod::sim_svm;
    case Method::ind_logistic: return ConvexMethod::ind_logistic;
    case Method::sim_logistic: return ConvexMethod::sim_logistic;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
  int n = 4;
  double density = 0.5;
  double p_plus = 0.5;
  double q_g = 0.9;
  std::size_t m_train = 50;
  std::size_t m_val = 50;
  std::size_t m_test = 50;
  int repetitions = 1;
  std::uint64_t seed = 0;
  /// random: edges per density and p_plus. two_pairs (n=4) and four_blocks
  /// (n=9) are fixed stand-ins with 4 and 16 equilibria.
  std::string truth = "random";
};

inline void validate(const SyntheticSpec& s) {
  detail::require<ArgumentError>(s.n >= 1 && s.n <= kEnumerationCap, "synthetic n must lie in [1, 25]");
  detail::require<ArgumentError>(s.density >= 0.0 && s.density <= 1.0, "density must lie in [0,1]");
  detail::require<ArgumentError>(s.p_plus >= 0.0 && s.p_plus <= 1.0, "p_plus must lie in [0,1]");
  detail::require<ArgumentError>(s.q_g > 0.0 && s.q_g < 1.0, "q_g must lie in (0,1)");
  detail::require<ArgumentError>(s.m_train >= 1 && s.m_val >= 1 && s.m_test >= 1, "split sizes must be positive");
  detail::require<ArgumentError>(s.repetitions >= 1, "repetitions must be positive");
}

/// Players {0,1} and {2,3} coordinate with unit weights; b = 0.
inline InfluenceGame two_pairs_game() {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  w(0, 1) = w(1, 0) = w(2, 3) = w(3, 2) = 1.0;
  return {w, Eigen::VectorXd::Zero(4)};
}

/// A coordinating triangle {0,1,2}, coordinating pairs {3,4} and {7,8}, and an
/// anti-coordinating pair {5,6}; b = 0. Each block has two equilibria.
inline InfluenceGame four_blocks_game() {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) w(i, j) = 1.0;
  w(3, 4) = w(4, 3) = 1.0;
  w(5, 6) = w(6, 5) = -1.0;
  w(7, 8) = w(8, 7) = 1.0;
  return {w, Eigen::VectorXd::Zero(9)};
}

/// Off-diagonal edges present with probability density, weight +1 with
/// probability p_plus and -1 otherwise; b = 0.
inline InfluenceGame random_sign_game(int n, double density, double p_plus, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double present = u(rng);
      const double sign = u(rng);
      if (present < density) w(i, j) = sign < p_plus ? 1.0 : -1.0;
    }
  return {w, Eigen::VectorXd::Zero(n)};
}

struct SyntheticInstance {
  InfluenceGame truth;
  EquilibriaSet truth_ne;
  JointActionDataset train;
  JointActionDataset val;
  JointActionDataset test;
  std::uint64_t truth_seed = 0;
  int attempts = 1;
};

inline constexpr int kTruthAttempts = 100;

/// Truth game and disjoint train/validation/test samples for one seed. A
/// trivial truth is regenerated with the next seed.
inline SyntheticInstance gen_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const bool fixed = spec.truth != "random";
  if (spec.truth == "two_pairs") detail::require<ArgumentError>(spec.n == 4, "two_pairs truth needs n = 4");
  else if (spec.truth == "four_blocks") detail::require<ArgumentError>(spec.n == 9, "four_blocks truth needs n = 9");
  else detail::require<ArgumentError>(!fixed, "unknown truth '" + spec.truth + "'");

  for (int attempt = 0; attempt < kTruthAttempts; ++attempt) {
    const std::uint64_t s = spec.seed + static_cast<std::uint64_t>(attempt);
    InfluenceGame truth = spec.truth == "two_pairs"     ? two_pairs_game()
                          : spec.truth == "four_blocks" ? four_blocks_game()
                                                        : random_sign_game(spec.n, spec.density, spec.p_plus, s);
    auto ne = enumerate_equilibria(truth, 0.0);
    if (ne.trivial()) {
      if (fixed) break;
      continue;
    }
    const MixtureModel model(ne, spec.q_g);
    return {std::move(truth),
            std::move(ne),
            sample(model, derive_seed(s, 1), spec.m_train),
            sample(model, derive_seed(s, 2), spec.m_val),
            sample(model, derive_seed(s, 3), spec.m_test),
            s,
            attempt + 1};
  }
  throw InvalidModelError("could not generate a non-trivial truth game in " + std::to_string(kTruthAttempts) +
                          " attempts (density=" + std::to_string(spec.density) + ")");
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::string source = "synthetic";  // synthetic | votes
  SyntheticSpec synthetic;
  std::string votes_file;
  std::size_t subset = 0;  // 0 keeps every player
  std::vector<Method> methods;
  std::vector<double> rho_grid;
  std::uint64_t seed = 0;
  int smooth_restarts = 5;
  int smooth_iters = 200;
  double smooth_step = 0.01;
  double alpha = 0.1;
  double beta = 0.001;
  int max_iters = 5000;
  double tol_grad = 1e-6;
  double tol_feas = 1e-7;
  std::string census_cache;
  int metrics_cap = kModelKlCap;
  double fallback_rho = 0.0006;
  bool timing = false;
  KeyValues echo;
};

/// 10 points log-spaced in [1e-4, 1], plus 0.0006, ascending.
inline std::vector<double> default_rho_grid() {
  std::vector<double> g;
  for (int k = 0; k < 10; ++k) g.push_back(std::pow(10.0, -4.0 + 4.0 * k / 9.0));
  g.push_back(0.0006);
  std::sort(g.begin(), g.end());
  return g;
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const auto t = lower(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError("config key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const KeyValues& kv) {
  ExperimentConfig c;
  c.echo = kv;
  for (const auto& [k, v] : kv) {
    if (k == "source") c.source = v;
    else if (k == "n") c.synthetic.n = static_cast<int>(detail::to_int(k, v));
    else if (k == "density") c.synthetic.density = detail::to_double(k, v);
    else if (k == "p_plus") c.synthetic.p_plus = detail::to_double(k, v);
    else if (k == "q_g") c.synthetic.q_g = detail::to_double(k, v);
    else if (k == "m_train") c.synthetic.m_train = static_cast<std::size_t>(detail::to_int(k, v));
    else if (k == "m_val") c.synthetic.m_val = static_cast<std::size_t>(detail::to_int(k, v));
    else if (k == "m_test") c.synthetic.m_test = static_cast<std::size_t>(detail::to_int(k, v));
    else if (k == "repetitions") c.synthetic.repetitions = static_cast<int>(detail::to_int(k, v));
    else if (k == "truth") c.synthetic.truth = v;
    else if (k == "votes_file") c.votes_file = v;
    else if (k == "subset") c.subset = static_cast<std::size_t>(detail::to_int(k, v));
    else if (k == "methods") {
      for (const auto& t : detail::split(v, ','))
        if (!t.empty()) c.methods.push_back(parse_method(t));
    } else if (k == "rho_grid") {
      for (const auto& t : detail::split(v, ','))
        if (!t.empty()) c.rho_grid.push_back(detail::to_double(k, t));
    } else if (k == "seed") c.seed = static_cast<std::uint64_t>(detail::to_int(k, v));
    else if (k == "smooth_restarts") c.smooth_restarts = static_cast<int>(detail::to_int(k, v));
    else if (k == "smooth_iters") c.smooth_iters = static_cast<int>(detail::to_int(k, v));
    else if (k == "smooth_step") c.smooth_step = detail::to_double(k, v);
    else if (k == "alpha") c.alpha = detail::to_double(k, v);
    else if (k == "beta") c.beta = detail::to_double(k, v);
    else if (k == "max_iters") c.max_iters = static_cast<int>(detail::to_int(k, v));
    else if (k == "tol_grad") c.tol_grad = detail::to_double(k, v);
    else if (k == "tol_feas") c.tol_feas = detail::to_double(k, v);
    else if (k == "census_cache") c.census_cache = v;
    else if (k == "metrics_cap") c.metrics_cap = static_cast<int>(detail::to_int(k, v));
    else if (k == "fallback_rho") c.fallback_rho = detail::to_double(k, v);
    else if (k == "timing") c.timing = detail::to_bool(k, v);
    else throw ParseError("unknown config key '" + k + "'");
  }
  c.synthetic.seed = c.seed;
  if (c.source != "synthetic" && c.source != "votes")
    throw ParseError("config key 'source' must be synthetic or votes, got '" + c.source + "'");
  if (c.source == "votes" && c.votes_file.empty()) throw ParseError("votes source needs votes_file");
  if (c.methods.empty()) throw ParseError("config needs a non-empty methods list");
  if (c.rho_grid.empty()) c.rho_grid = default_rho_grid();
  for (double r : c.rho_grid) detail::require<ArgumentError>(r >= 0.0 && std::isfinite(r), "rho grid values must be >= 0");
  std::sort(c.rho_grid.begin(), c.rho_grid.end());
  c.rho_grid.erase(std::unique(c.rho_grid.begin(), c.rho_grid.end()), c.rho_grid.end());
  detail::require<ArgumentError>(c.metrics_cap >= 1 && c.metrics_cap <= kModelKlCap, "metrics_cap must lie in [1, 20]");
  return c;
}

// ---------------------------------------------------------------------------
// Model selection

/// Argmax of the validation log-likelihood; ties go to the larger rho.
inline double select_rho(const std::map<double, double>& val_logliks) {
  detail::require<ArgumentError>(!val_logliks.empty(), "select_rho needs a non-empty map");
  auto best = val_logliks.begin();
  for (auto it = val_logliks.begin(); it != val_logliks.end(); ++it)
    if (it->second >= best->second) best = it;
  return best->first;
}

// ---------------------------------------------------------------------------
// Fitting one method at one rho

struct LearnedModel {
  std::optional<InfluenceGame> game;
  std::optional<EquilibriaSet> ne;  // available when n <= metrics cap
  double q = 0.0;                   // q-hat from the training split
  int degenerate_players = 0;
  bool converged = true;
};

namespace detail {

inline LearnedModel fit_method(Method method, double rho, const JointActionDataset& train, const ExperimentConfig& cfg,
                               std::uint64_t seed, const GameCensus* census) {
  const int n = train.n();
  const bool enumerable = n <= cfg.metrics_cap;
  LearnedModel out;
  switch (method) {
    case Method::sample_picking: {
      auto fit = sample_picking(train);
      out.ne = std::move(fit.equilibria);
      out.q = fit.q;
      return out;
    }
    case Method::exhaustive: {
      require<CapacityError>(census != nullptr, "exhaustive search needs n <= 4");
      auto fit = exhaustive_mle_influence(train, *census);
      out.game = fit.game;
      out.ne = std::move(fit.equilibria);
      out.q = fit.q;
      return out;
    }
    case Method::sigmoid_ml:
    case Method::sigmoid_mepe: {
      SmoothTrainConfig sc;
      sc.rho = rho;
      sc.step = cfg.smooth_step;
      sc.max_iters = cfg.smooth_iters;
      sc.seed = seed;
      sc.restarts = cfg.smooth_restarts;
      sc.sigmoid.alpha = cfg.alpha;
      sc.sigmoid.beta = cfg.beta;
      sc.exact_rank_cap = cfg.metrics_cap;
      auto res = train_sigmoidal(train, sc, method == Method::sigmoid_ml ? SmoothMode::likelihood : SmoothMode::empirical);
      out.game = std::move(res.game);
      out.q = res.q;
      break;
    }
    default: {
      ConvexTrainConfig cc;
      cc.rho = rho;
      cc.method = *convex_method(method);
      cc.max_iters = cfg.max_iters;
      cc.tol_grad = cfg.tol_grad;
      cc.tol_feas = cfg.tol_feas;
      cc.seed = seed;
      auto res = train_convex(train, cc);
      out.degenerate_players = static_cast<int>(std::count(res.per_player_degenerate.begin(), res.per_player_degenerate.end(), true));
      out.converged = res.converged;
      out.game = fix_degenerate(res, train);
      out.q = optimal_q(empirical_proportion(*out.game, train), train.m());
      break;
    }
  }
  if (enumerable) out.ne = enumerate_equilibria(*out.game);
  return out;
}

/// q-hat kept away from {0,1} so the learned pair is always a valid model.
inline double evaluation_q(double q, std::size_t m) {
  const double eps = 1.0 / (2.0 * static_cast<double>(m));
  return std::clamp(q, eps, 1.0 - eps);
}

inline double loglik_on(const LearnedModel& model, double q, const JointActionDataset& data) {
  return avg_log_likelihood(*model.ne, q, data);
}

inline double pi_hat_on(const LearnedModel& model, const JointActionDataset& data) {
  return model.ne ? empirical_proportion(*model.ne, data) : empirical_proportion(*model.game, data);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment pipeline

struct ReportRow {
  Method method = Method::sample_picking;
  double rho = 0.0;
  int rep = 0;
  std::optional<double> train_loglik;
  std::optional<double> val_loglik;
  std::optional<double> test_loglik;
  std::optional<double> kl_to_truth;
  bool kl_infinite = false;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<std::size_t> ne_count;
  double pi_hat = 0.0;
  double q = 0.0;
  int degenerate_players = 0;
  bool converged = true;
  bool selected = false;
  double seconds = 0.0;
  std::optional<InfluenceScores> influence;  // votes data, selected rows only
};

struct RepetitionInfo {
  int rep = 0;
  std::uint64_t truth_seed = 0;
  std::size_t truth_ne = 0;
  std::size_t m_train = 0, m_val = 0, m_test = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  int n = 0;
  std::vector<std::string> names;
  std::vector<std::string> parties;
  std::vector<RepetitionInfo> repetitions;
  std::vector<ReportRow> rows;
};

namespace detail {

struct Split {
  JointActionDataset train, val, test;
  std::optional<EquilibriaSet> truth;
  RepetitionInfo info;
};

// Thirds of the vote events take turns as train, validation and test.
inline std::vector<Split> six_fold_rotation(const JointActionDataset& data) {
  const auto m = data.m();
  require<ArgumentError>(m >= 3, "six-fold rotation needs at least 3 vote events");
  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t l = 0; l < m; ++l) parts[std::min<std::size_t>(2, l * 3 / m)].push_back(l);
  std::array<int, 3> roles = {0, 1, 2};
  std::vector<Split> out;
  int rep = 0;
  do {
    Split s{data.rows(parts[roles[0]]), data.rows(parts[roles[1]]), data.rows(parts[roles[2]]), std::nullopt, {}};
    s.info = {rep++, 0, 0, s.train.m(), s.val.m(), s.test.m()};
    out.push_back(std::move(s));
  } while (std::next_permutation(roles.begin(), roles.end()));
  return out;
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  std::vector<detail::Split> splits;
  if (cfg.source == "synthetic") {
    report.n = cfg.synthetic.n;
    for (int r = 0; r < cfg.synthetic.repetitions; ++r) {
      SyntheticSpec spec = cfg.synthetic;
      spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
      auto inst = gen_synthetic(spec);
      detail::Split s{std::move(inst.train), std::move(inst.val), std::move(inst.test), inst.truth_ne, {}};
      s.info = {r, inst.truth_seed, inst.truth_ne.size(), s.train.m(), s.val.m(), s.test.m()};
      splits.push_back(std::move(s));
    }
  } else {
    auto rec = read_votes_file(cfg.votes_file);
    if (cfg.subset > 0 && cfg.subset < rec.names.size())
      rec = select_players(rec, stratified_subset(rec, cfg.subset, derive_seed(cfg.seed, 0x5eed)));
    report.n = rec.data.n();
    report.names = rec.names;
    report.parties = rec.parties;
    splits = detail::six_fold_rotation(rec.data);
  }
  for (const auto& s : splits) report.repetitions.push_back(s.info);

  const int n = report.n;
  const bool enumerable = n <= cfg.metrics_cap;
  std::optional<GameCensus> census;
  if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::exhaustive) != cfg.methods.end() && n <= kCensusCap)
    census = cached_census(n, cfg.census_cache);

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method method = cfg.methods[mi];
    const std::vector<double> grid = uses_rho(method) ? cfg.rho_grid : std::vector<double>{0.0};
    for (const auto& split : splits) {
      const int rep = split.info.rep;
      std::vector<ReportRow> rows;
      std::vector<LearnedModel> models;
      std::map<double, double> val;
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const double rho = grid[gi];
        auto context = [&](const std::string& what) {
          std::ostringstream msg;
          msg << "method=" << to_string(method) << " rho=" << rho << " rep=" << rep << ": " << what;
          return msg.str();
        };
        try {
          const auto t0 = std::chrono::steady_clock::now();
          const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(rep)),
                                                 static_cast<std::uint64_t>(mi) * 1000 + gi);
          auto model = detail::fit_method(method, rho, split.train, cfg, seed, census ? &*census : nullptr);
          ReportRow row;
          row.method = method;
          row.rho = rho;
          row.rep = rep;
          row.q = model.q;
          row.degenerate_players = model.degenerate_players;
          row.converged = model.converged;
          row.pi_hat = detail::pi_hat_on(model, split.test);
          if (enumerable && model.ne) {
            const double q_eval = detail::evaluation_q(model.q, split.train.m());
            row.train_loglik = detail::loglik_on(model, q_eval, split.train);
            row.val_loglik = detail::loglik_on(model, q_eval, split.val);
            row.test_loglik = detail::loglik_on(model, q_eval, split.test);
            row.ne_count = model.ne->size();
            val[rho] = *row.val_loglik;
            if (split.truth) {
              const MixtureModel truth(*split.truth, cfg.synthetic.q_g);
              const MixtureModel learned(*model.ne, q_eval);
              const double kl = model_kl_exact(truth, learned);
              row.kl_infinite = !std::isfinite(kl);
              row.kl_to_truth = row.kl_infinite ? kKlDisplayCap : std::min(kl, kKlDisplayCap);
              auto [p, r] = equilibrium_precision_recall(*split.truth, *model.ne);
              row.precision = p;
              row.recall = r;
            }
          }
          row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          rows.push_back(std::move(row));
          models.push_back(std::move(model));
        } catch (const std::exception& e) {
          throw ExperimentError(context(e.what()));
        }
      }
      double chosen = 0.0;
      if (!val.empty()) {
        chosen = select_rho(val);
      } else {
        // no likelihood above the metrics cap: the grid point nearest the fallback
        chosen = *std::min_element(grid.begin(), grid.end(), [&](double a, double b) {
          return std::abs(std::log(a + 1e-300) - std::log(cfg.fallback_rho)) <
                 std::abs(std::log(b + 1e-300) - std::log(cfg.fallback_rho));
        });
      }
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].rho != chosen) continue;
        rows[k].selected = true;
        if (cfg.source == "votes" && models[k].game) {
          try {
            rows[k].influence = influence_scores(*models[k].game);
          } catch (const ArgumentError&) {
            // a row left all-zero by a non-convex learner has no normalized influence
          }
        }
      }
      for (auto& row : rows) report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
};

inline Moments moments(const std::vector<double>& v) {
  Moments m;
  m.count = v.size();
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

// Mean normalized influence a member of party `to` receives from all members of party `from`.
inline nlohmann::json party_influence(const InfluenceScores& s, const std::vector<std::string>& parties) {
  std::map<std::string, std::vector<int>> members;
  for (std::size_t i = 0; i < parties.size(); ++i) members[parties[i]].push_back(static_cast<int>(i));
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [from, fm] : members)
    for (const auto& [to, tm] : members) {
      double total = 0.0;
      for (int i : tm)
        for (int j : fm) total += s.normalized(i, j);
      out.push_back({{"from", from}, {"to", to}, {"mean_received", total / static_cast<double>(tm.size())}});
    }
  return out;
}

inline std::vector<std::pair<std::string, double>> row_metrics(const ReportRow& r) {
  std::vector<std::pair<std::string, double>> out;
  auto add = [&](const char* k, const std::optional<double>& v) {
    if (v) out.emplace_back(k, *v);
  };
  add("train_loglik", r.train_loglik);
  add("val_loglik", r.val_loglik);
  add("test_loglik", r.test_loglik);
  add("kl_to_truth", r.kl_to_truth);
  add("precision", r.precision);
  add("recall", r.recall);
  if (r.ne_count) out.emplace_back("ne_count", static_cast<double>(*r.ne_count));
  out.emplace_back("pi_hat", r.pi_hat);
  out.emplace_back("q", r.q);
  out.emplace_back("degenerate_players", r.degenerate_players);
  return out;
}

}  // namespace detail

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json report_to_json(const ExperimentReport& rep) {
  using nlohmann::json;
  const auto& cfg = rep.config;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  json echo = json::object();
  for (const auto& [k, v] : cfg.echo) echo[k] = v;
  json methods = json::array();
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  j["config"] = {{"given", echo},
                 {"resolved",
                  {{"source", cfg.source},
                   {"methods", methods},
                   {"rho_grid", cfg.rho_grid},
                   {"seed", cfg.seed},
                   {"metrics_cap", cfg.metrics_cap},
                   {"alpha", cfg.alpha},
                   {"beta", cfg.beta}}}};
  j["data"] = {{"n", rep.n}, {"likelihood_available", rep.n <= cfg.metrics_cap}};
  if (!rep.names.empty()) j["data"]["players"] = rep.names;
  if (!rep.parties.empty()) j["data"]["parties"] = rep.parties;
  json reps = json::array();
  for (const auto& r : rep.repetitions) {
    json e = {{"rep", r.rep}, {"m_train", r.m_train}, {"m_val", r.m_val}, {"m_test", r.m_test}};
    if (cfg.source == "synthetic") {
      e["truth_seed"] = r.truth_seed;
      e["truth_ne_count"] = r.truth_ne;
    }
    reps.push_back(std::move(e));
  }
  j["repetitions"] = std::move(reps);

  json rows = json::array();
  json selected = json::array();
  json influence = json::array();
  for (const auto& r : rep.rows) {
    json row = {{"method", to_string(r.method)},
                {"rho", r.rho},
                {"rep", r.rep},
                {"train_loglik", detail::optional_json(r.train_loglik)},
                {"val_loglik", detail::optional_json(r.val_loglik)},
                {"test_loglik", detail::optional_json(r.test_loglik)},
                {"kl_to_truth", detail::optional_json(r.kl_to_truth)},
                {"kl_infinite", r.kl_infinite},
                {"precision", detail::optional_json(r.precision)},
                {"recall", detail::optional_json(r.recall)},
                {"ne_count", r.ne_count ? json(*r.ne_count) : json(nullptr)},
                {"pi_hat", r.pi_hat},
                {"q", r.q},
                {"degenerate_players", r.degenerate_players},
                {"converged", r.converged},
                {"selected", r.selected}};
    if (cfg.timing) row["seconds"] = r.seconds;
    rows.push_back(std::move(row));
    if (!r.selected) continue;
    selected.push_back({{"method", to_string(r.method)}, {"rep", r.rep}, {"rho", r.rho}});
    if (r.influence) {
      json e = {{"method", to_string(r.method)},
                {"rep", r.rep},
                {"influence", std::vector<double>(r.influence->influence.begin(), r.influence->influence.end())},
                {"bias", std::vector<double>(r.influence->bias.begin(), r.influence->bias.end())}};
      if (!rep.parties.empty()) e["parties"] = detail::party_influence(*r.influence, rep.parties);
      influence.push_back(std::move(e));
    }
  }
  j["rows"] = std::move(rows);
  j["selected"] = std::move(selected);
  if (!influence.empty()) j["influence"] = std::move(influence);

  json aggregates = json::array();
  for (auto m : cfg.methods) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : rep.rows) {
      if (r.method != m || !r.selected) continue;
      values["rho"].push_back(r.rho);
      for (const auto& [k, v] : detail::row_metrics(r)) values[k].push_back(v);
    }
    json stats = json::object();
    for (const auto& [k, v] : values) {
      const auto mo = detail::moments(v);
      stats[k] = {{"mean", mo.mean}, {"std", mo.std}, {"count", mo.count}};
    }
    aggregates.push_back({{"method", to_string(m)}, {"selected", stats}});
  }
  j["aggregates"] = std::move(aggregates);
  return j;
}

/// Flat table keyed (method, rho, rep, metric).
inline std::string report_to_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "method,rho,rep,metric,value\n";
  for (const auto& r : rep.rows) {
    auto metrics = detail::row_metrics(r);
    metrics.emplace_back("selected", r.selected ? 1.0 : 0.0);
    std::sort(metrics.begin(), metrics.end());
    for (const auto& [k, v] : metrics) out << to_string(r.method) << ',' << r.rho << ',' << r.rep << ',' << k << ',' << v << '\n';
  }
  return out.str();
}

}  // namespace lig
