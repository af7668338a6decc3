#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/game.hpp"
#include "lig/generative.hpp"

namespace lig {

// ---------------------------------------------------------------------------
// Sample-picking: exact MLE over general games.

struct GeneralGameFit {
  EquilibriaSet equilibria;
  double q = 0.0;
  double loglik = 0.0;
  std::size_t k = 0;  // number of admitted actions
};

/// Admits the k most frequent observed actions as equilibria, for the k that
/// maximizes the log-likelihood. Frequency ties go to the smaller index and
/// likelihood ties to the smaller k.
inline GeneralGameFit sample_picking(const JointActionDataset& data) {
  const int n = data.n();
  detail::require<CapacityError>(n <= kMaxIndexedPlayers, "sample-picking needs n <= 63");
  const auto& unique = data.unique();
  const auto m = data.m();
  GeneralGameFit best;
  best.loglik = -kInf;
  std::size_t cumulative = 0;
  for (std::size_t k = 1; k <= unique.size(); ++k) {
    cumulative += unique[k - 1].count;
    const double pi_hat = static_cast<double>(cumulative) / static_cast<double>(m);
    const double pi = std::ldexp(static_cast<double>(k), -n);
    const double q = optimal_q(pi_hat, m);
    const double ll = log_likelihood_from_proportions(pi_hat, pi, q, n);
    if (ll > best.loglik) {
      best.loglik = ll;
      best.k = k;
      best.q = q;
    }
  }
  std::vector<ActionIndex> members;
  for (std::size_t k = 0; k < best.k; ++k) members.push_back(unique[k].action.index());
  best.equilibria = EquilibriaSet(n, std::move(members));
  if (best.equilibria.trivial()) best.q = best.equilibria.empty() ? 0.0 : 1.0;
  return best;
}

// ---------------------------------------------------------------------------
// Tie-aware linear threshold functions over {-1,+1}^d.

inline constexpr int kLtfDimensionCap = 4;

/// Integer weight bound sufficient for all labelings of dimension d: the
/// Muroga bound (h+1)^((h+1)/2) / 2^h for the homogenized vector of length
/// h = d + 1, rounded up.
inline int ltf_weight_bound(int d) {
  const double h = d + 1;
  return static_cast<int>(std::ceil(std::pow(h + 1.0, (h + 1.0) / 2.0) / std::ldexp(1.0, d + 1) - 1e-12));
}

struct LtfLabeling {
  std::uint64_t signature = 0;  // base-3 digit (label + 1) per vertex, vertex 0 least significant
  std::vector<int> w;
  int b = 0;
};

/// Distinct labelings y -> sign(w'y - b) in {-1, 0, +1}.
struct LtfTable {
  int d = 0;
  int weight_bound = 0;
  bool strict = false;
  std::vector<LtfLabeling> labelings;  // ascending signature

  std::size_t size() const { return labelings.size(); }

  static int label(std::uint64_t signature, std::size_t vertex) {
    for (std::size_t k = 0; k < vertex; ++k) signature /= 3;
    return static_cast<int>(signature % 3) - 1;
  }
};

namespace detail {

inline int sign_of(long long v) { return (v > 0) - (v < 0); }

inline std::uint64_t labeling_signature(const std::vector<int>& w, int b, int d, bool* has_tie) {
  std::uint64_t sig = 0, place = 1;
  *has_tie = false;
  for (std::size_t v = 0; v < (std::size_t{1} << d); ++v) {
    long long s = -b;
    for (int k = 0; k < d; ++k) s += static_cast<long long>(w[k]) * action_at(v, k);
    const int lab = sign_of(s);
    if (lab == 0) *has_tie = true;
    sig += static_cast<std::uint64_t>(lab + 1) * place;
    place *= 3;
  }
  return sig;
}

}  // namespace detail

/// Every tie-aware (or, with strict, tie-free) labeling realized by integer
/// (w, b) with entries in [-bound, bound]. bound <= 0 selects ltf_weight_bound(d).
inline LtfTable enumerate_ltfs(int d, bool strict = false, int bound = 0) {
  detail::require<ArgumentError>(d >= 0, "dimension must be non-negative");
  detail::require<CapacityError>(d <= kLtfDimensionCap, "LTF enumeration refused: d above cap 4");
  LtfTable table;
  table.d = d;
  table.strict = strict;
  table.weight_bound = bound > 0 ? bound : ltf_weight_bound(d);
  const int B = table.weight_bound;
  std::map<std::uint64_t, LtfLabeling> seen;
  std::vector<int> w(static_cast<std::size_t>(d), -B);
  for (;;) {
    for (int b = -B; b <= B; ++b) {
      bool tie = false;
      const auto sig = detail::labeling_signature(w, b, d, &tie);
      if (strict && tie) continue;
      seen.try_emplace(sig, LtfLabeling{sig, w, b});
    }
    int k = 0;
    while (k < d && w[k] == B) w[k++] = -B;
    if (k == d) break;
    ++w[k];
  }
  table.labelings.reserve(seen.size());
  for (auto& [sig, lab] : seen) table.labelings.push_back(std::move(lab));
  return table;
}

// ---------------------------------------------------------------------------
// Census of equilibrium sets realizable by influence games, n <= 4.

inline constexpr int kCensusCap = 4;

struct CensusMember {
  std::uint32_t mask = 0;  // bit x set iff joint action x is an equilibrium
  InfluenceGame witness = InfluenceGame::zero(1);

  EquilibriaSet equilibria(int n) const {
    std::vector<ActionIndex> members;
    for (std::uint32_t x = 0; x < (1U << n); ++x)
      if ((mask >> x) & 1U) members.push_back(x);
    return {n, std::move(members)};
  }
};

struct GameCensus {
  int n = 0;
  int weight_bound = 0;
  bool strict = false;
  std::vector<CensusMember> members;  // ascending mask

  std::size_t count() const { return members.size(); }
};

namespace detail {

// Joint actions accepted by player i when its best response follows the
// labeling over x_{-i}: x_i * label >= 0.
inline std::uint32_t accept_mask(int n, int i, std::uint64_t signature) {
  std::uint32_t mask = 0;
  for (std::uint32_t x = 0; x < (1U << n); ++x) {
    const std::uint32_t low = x & ((1U << i) - 1U);
    const std::uint32_t high = (x >> (i + 1)) << i;
    const int lab = LtfTable::label(signature, low | high);
    if (action_at(x, i) * lab >= 0) mask |= 1U << x;
  }
  return mask;
}

inline InfluenceGame witness_game(int n, const LtfTable& table, const std::vector<std::uint16_t>& choice) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const auto& lab = table.labelings[choice[static_cast<std::size_t>(i)]];
    int k = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) w(i, j) = lab.w[static_cast<std::size_t>(k++)];
    b(i) = lab.b;
  }
  return {std::move(w), std::move(b)};
}

}  // namespace detail

/// All distinct NE sets of n-player influence games (n <= 4), each with one
/// integer witness game. Player i's best-response pattern is a labeling of
/// x_{-i}; NE sets are intersections of the per-player accept sets.
inline GameCensus enumerate_influence_games(int n, bool strict = false) {
  detail::require<ArgumentError>(n >= 1, "census needs n >= 1");
  detail::require<CapacityError>(n <= kCensusCap, "census refused: n above cap 4");
  const LtfTable table = enumerate_ltfs(n - 1, strict);
  const std::size_t space = std::size_t{1} << (std::size_t{1} << n);
  const std::uint32_t full = static_cast<std::uint32_t>(space - 1);

  std::vector<std::vector<std::uint32_t>> accept(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (const auto& lab : table.labelings) accept[static_cast<std::size_t>(i)].push_back(detail::accept_mask(n, i, lab.signature));

  // frontier[mask] holds the labeling choices of the first witness found
  std::vector<std::vector<std::uint16_t>> frontier(space);
  std::vector<bool> present(space, false);
  present[full] = true;
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<std::uint16_t>> next(space);
    std::vector<bool> next_present(space, false);
    for (std::size_t s = 0; s < space; ++s) {
      if (!present[s]) continue;
      for (std::size_t k = 0; k < table.size(); ++k) {
        const std::size_t t = s & accept[static_cast<std::size_t>(i)][k];
        if (next_present[t]) continue;
        next_present[t] = true;
        next[t] = frontier[s];
        next[t].push_back(static_cast<std::uint16_t>(k));
      }
    }
    frontier = std::move(next);
    present = std::move(next_present);
  }

  GameCensus census;
  census.n = n;
  census.weight_bound = table.weight_bound;
  census.strict = strict;
  for (std::size_t s = 0; s < space; ++s)
    if (present[s])
      census.members.push_back({static_cast<std::uint32_t>(s), detail::witness_game(n, table, frontier[s])});
  return census;
}

/// Census text cache: a header (n, tie mode, weight bound, count) followed by
/// one line per NE set: hex mask, then the witness W row-major and b.
inline void save_census(const GameCensus& census, const std::filesystem::path& path) {
  std::ofstream out(path);
  detail::require<ArgumentError>(static_cast<bool>(out), "cannot write census cache " + path.string());
  out << "lig-census 1\n"
      << "n " << census.n << "\n"
      << "tie_aware " << (census.strict ? 0 : 1) << "\n"
      << "weight_bound " << census.weight_bound << "\n"
      << "count " << census.count() << "\n";
  for (const auto& mem : census.members) {
    out << std::hex << mem.mask << std::dec;
    const auto& w = mem.witness.weights();
    for (int i = 0; i < census.n; ++i)
      for (int j = 0; j < census.n; ++j) out << ' ' << static_cast<long long>(w(i, j));
    for (int i = 0; i < census.n; ++i) out << ' ' << static_cast<long long>(mem.witness.thresholds()(i));
    out << '\n';
  }
}

inline GameCensus load_census(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::require<ArgumentError>(static_cast<bool>(in), "cannot read census cache " + path.string());
  auto expect = [&](const std::string& key) {
    std::string k;
    long long v = 0;
    in >> k >> v;
    detail::require<ArgumentError>(static_cast<bool>(in) && k == key, "census cache: expected key '" + key + "'");
    return v;
  };
  GameCensus census;
  detail::require<ArgumentError>(expect("lig-census") == 1, "census cache: unsupported version");
  census.n = static_cast<int>(expect("n"));
  detail::require<ArgumentError>(census.n >= 1 && census.n <= kCensusCap, "census cache: bad n");
  census.strict = expect("tie_aware") == 0;
  census.weight_bound = static_cast<int>(expect("weight_bound"));
  const auto count = static_cast<std::size_t>(expect("count"));
  const int n = census.n;
  for (std::size_t r = 0; r < count; ++r) {
    CensusMember mem;
    in >> std::hex >> mem.mask >> std::dec;
    Eigen::MatrixXd w(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) in >> w(i, j);
    for (int i = 0; i < n; ++i) in >> b(i);
    detail::require<ArgumentError>(static_cast<bool>(in), "census cache: truncated at member " + std::to_string(r));
    mem.witness = InfluenceGame(std::move(w), std::move(b));
    census.members.push_back(std::move(mem));
  }
  detail::require<ArgumentError>(
      std::is_sorted(census.members.begin(), census.members.end(),
                     [](const CensusMember& a, const CensusMember& b) { return a.mask < b.mask; }),
      "census cache: members not sorted");
  return census;
}

/// Loads the census from cache if it exists and matches, otherwise computes
/// and writes it.
inline GameCensus cached_census(int n, const std::filesystem::path& cache, bool strict = false) {
  if (!cache.empty() && std::filesystem::exists(cache)) {
    auto census = load_census(cache);
    if (census.n == n && census.strict == strict) return census;
  }
  auto census = enumerate_influence_games(n, strict);
  if (!cache.empty()) save_census(census, cache);
  return census;
}

// ---------------------------------------------------------------------------
// Exhaustive MLE over the census.

struct InfluenceFit {
  EquilibriaSet equilibria;
  InfluenceGame game = InfluenceGame::zero(1);
  double q = 0.0;
  double loglik = 0.0;
  bool trivial = false;
};

/// Census member maximizing the log-likelihood at q-hat; ties go to the
/// smaller |NE|, then the lexicographically smaller member list.
inline InfluenceFit exhaustive_mle_influence(const JointActionDataset& data, const GameCensus& census) {
  const int n = data.n();
  detail::require<CapacityError>(n <= kCensusCap, "exhaustive search refused: n above cap 4");
  detail::require<ArgumentError>(census.n == n, "census player count does not match dataset");
  std::vector<std::size_t> counts(std::size_t{1} << n, 0);
  for (const auto& u : data.unique()) counts[u.action.index()] = u.count;
  const auto m = data.m();

  const CensusMember* best = nullptr;
  double best_ll = -kInf;
  std::vector<ActionIndex> best_list;
  for (const auto& mem : census.members) {
    std::size_t hits = 0;
    for (std::uint32_t x = 0; x < (1U << n); ++x)
      if ((mem.mask >> x) & 1U) hits += counts[x];
    const int k = std::popcount(mem.mask);
    const double pi_hat = static_cast<double>(hits) / static_cast<double>(m);
    const double ll = log_likelihood_at_optimal_q(pi_hat, std::ldexp(static_cast<double>(k), -n), m, n);
    bool take = best == nullptr || ll > best_ll;
    if (!take && ll == best_ll) {
      const int bk = std::popcount(best->mask);
      if (k < bk) take = true;
      else if (k == bk) take = mem.equilibria(n).members() < best_list;
    }
    if (take) {
      best = &mem;
      best_ll = ll;
      best_list = mem.equilibria(n).members();
    }
  }
  InfluenceFit fit;
  fit.equilibria = best->equilibria(n);
  fit.game = best->witness;
  fit.loglik = best_ll;
  fit.trivial = fit.equilibria.trivial();
  fit.q = fit.trivial ? (fit.equilibria.empty() ? 0.0 : 1.0)
                      : optimal_q(empirical_proportion(fit.equilibria, data), m);
  return fit;
}

}  // namespace lig
