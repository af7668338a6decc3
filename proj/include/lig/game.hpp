#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lig/error.hpp"
#include "lig/joint_action.hpp"

namespace lig {

/// Default slack for equilibrium membership with real-valued weights.
inline constexpr double kDefaultTol = 1e-9;
/// Exhaustive scans over {-1,+1}^n refuse n above this.
inline constexpr int kEnumerationCap = 25;

/// Parameters (w_i, b_i) of one player; w has the diagonal slot removed.
struct PlayerRow {
  std::vector<double> w;
  double b = 0.0;
};

/// Linear influence game G = (W, b): player i's payoff is x_i (w_i' x_{-i} - b_i).
class InfluenceGame {
 public:
  InfluenceGame(Eigen::MatrixXd weights, Eigen::VectorXd thresholds)
      : w_(std::move(weights)), b_(std::move(thresholds)) {
    detail::require<ArgumentError>(w_.rows() >= 1, "game needs at least one player");
    detail::require<ArgumentError>(w_.rows() == w_.cols(), "weight matrix must be square");
    detail::require<ArgumentError>(b_.size() == w_.rows(), "threshold vector length must equal n");
    detail::require<ArgumentError>(w_.allFinite() && b_.allFinite(), "game parameters must be finite");
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      detail::require<ArgumentError>(w_(i, i) == 0.0, "weight matrix diagonal must be zero");
  }

  static InfluenceGame zero(int n) {
    return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  }

  int n() const { return static_cast<int>(w_.rows()); }
  const Eigen::MatrixXd& weights() const { return w_; }
  const Eigen::VectorXd& thresholds() const { return b_; }

  /// f_i(x_{-i}) = w_i' x_{-i} - b_i
  double influence(int i, std::span<const std::int8_t> x) const {
    double s = 0.0;
    for (int j = 0; j < n(); ++j)
      if (j != i) s += w_(i, j) * x[j];
    return s - b_(i);
  }

  PlayerRow row(int i) const {
    PlayerRow r;
    r.w.reserve(static_cast<std::size_t>(n() - 1));
    for (int j = 0; j < n(); ++j)
      if (j != i) r.w.push_back(w_(i, j));
    r.b = b_(i);
    return r;
  }

  /// True iff (w_i, b_i) = 0.
  bool absolutely_indifferent(int i) const {
    return b_(i) == 0.0 && w_.row(i).cwiseAbs().maxCoeff() == 0.0;
  }

 private:
  Eigen::MatrixXd w_;
  Eigen::VectorXd b_;
};

/// A set of joint actions stored as sorted unique indices. Also the
/// representation of a general game identified by its equilibria.
class EquilibriaSet {
 public:
  EquilibriaSet() = default;

  EquilibriaSet(int n, std::vector<ActionIndex> members) : n_(n), members_(std::move(members)) {
    detail::require<ArgumentError>(n >= 1 && n <= kMaxIndexedPlayers, "player count out of range");
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    if (!members_.empty() && n < kMaxIndexedPlayers)
      detail::require<ArgumentError>(members_.back() < (ActionIndex{1} << n), "member index out of range");
  }

  int n() const { return n_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<ActionIndex>& members() const { return members_; }

  bool contains(ActionIndex x) const {
    return std::binary_search(members_.begin(), members_.end(), x);
  }
  bool contains(std::span<const std::int8_t> x) const {
    ActionIndex idx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > 0) idx |= ActionIndex{1} << i;
    return contains(idx);
  }

  /// |NE| / 2^n
  double proportion() const { return std::ldexp(static_cast<double>(members_.size()), -n_); }
  double space_size() const { return std::ldexp(1.0, n_); }
  bool trivial() const { return members_.empty() || static_cast<double>(members_.size()) == space_size(); }

  std::size_t intersection_size(const EquilibriaSet& other) const {
    std::size_t c = 0;
    auto a = members_.begin();
    auto b = other.members_.begin();
    while (a != members_.end() && b != other.members_.end()) {
      if (*a < *b) ++a;
      else if (*b < *a) ++b;
      else { ++c; ++a; ++b; }
    }
    return c;
  }

  friend bool operator==(const EquilibriaSet&, const EquilibriaSet&) = default;

 private:
  int n_ = 0;
  std::vector<ActionIndex> members_;
};

inline bool is_equilibrium(const InfluenceGame& game, std::span<const std::int8_t> x,
                           double tol = kDefaultTol) {
  detail::require<ArgumentError>(static_cast<int>(x.size()) == game.n(),
                                 "joint action length does not match game");
  detail::require<ArgumentError>(tol >= 0.0, "tolerance must be non-negative");
  for (int i = 0; i < game.n(); ++i)
    if (x[i] * game.influence(i, x) < -tol) return false;
  return true;
}

inline bool is_equilibrium(const InfluenceGame& game, const JointAction& x, double tol = kDefaultTol) {
  return is_equilibrium(game, x.view(), tol);
}

namespace detail {

// Partial sums of w_i' x over the low and high halves of the index bits, laid
// out [half_index][player] so a full scan reads contiguous memory.
struct SplitSums {
  int low_bits = 0;
  int n = 0;
  std::vector<double> low;
  std::vector<double> high;

  explicit SplitSums(const Eigen::MatrixXd& w) : low_bits(static_cast<int>(w.rows()) / 2), n(static_cast<int>(w.rows())) {
    const int high_bits = n - low_bits;
    low.assign((std::size_t{1} << low_bits) * n, 0.0);
    high.assign((std::size_t{1} << high_bits) * n, 0.0);
    for (std::size_t lo = 0; lo < (std::size_t{1} << low_bits); ++lo)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < low_bits; ++j) s += w(i, j) * action_at(lo, j);
        low[lo * n + i] = s;
      }
    for (std::size_t hi = 0; hi < (std::size_t{1} << high_bits); ++hi)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < high_bits; ++j) s += w(i, low_bits + j) * action_at(hi, j);
        high[hi * n + i] = s;
      }
  }
};

}  // namespace detail

/// All pure-strategy Nash equilibria by exhaustive scan of the 2^n joint actions.
inline EquilibriaSet enumerate_equilibria(const InfluenceGame& game, double tol = kDefaultTol,
                                          int cap = kEnumerationCap) {
  const int n = game.n();
  detail::require<CapacityError>(n <= cap && n <= kEnumerationCap,
                                 "enumeration refused: n=" + std::to_string(n) + " exceeds cap " +
                                     std::to_string(std::min(cap, kEnumerationCap)));
  detail::require<ArgumentError>(tol >= 0.0, "tolerance must be non-negative");
  const detail::SplitSums sums(game.weights());
  const auto& b = game.thresholds();
  const std::size_t low_count = std::size_t{1} << sums.low_bits;
  const std::size_t high_count = std::size_t{1} << (n - sums.low_bits);
  std::vector<ActionIndex> members;
  for (std::size_t hi = 0; hi < high_count; ++hi) {
    const double* hrow = &sums.high[hi * n];
    for (std::size_t lo = 0; lo < low_count; ++lo) {
      const double* lrow = &sums.low[lo * n];
      const ActionIndex x = (static_cast<ActionIndex>(hi) << sums.low_bits) | lo;
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const double f = lrow[i] + hrow[i] - b(i);
        ok = action_at(x, i) * f >= -tol;
      }
      if (ok) members.push_back(x);
    }
  }
  return {n, std::move(members)};
}

/// pi(G) = |NE(G)| / 2^n
inline double true_proportion(const InfluenceGame& game, double tol = kDefaultTol) {
  return enumerate_equilibria(game, tol).proportion();
}

/// Number of vertices x of {-1,+1}^d on the hyperplane |w'x - b| <= tol.
inline std::uint64_t hyperplane_vertex_count(std::span<const double> w, double b, double tol = 0.0) {
  const int d = static_cast<int>(w.size());
  detail::require<CapacityError>(d <= kEnumerationCap, "hyperplane vertex count refused: d above cap");
  detail::require<ArgumentError>(tol >= 0.0, "tolerance must be non-negative");
  if (d == 0) return std::abs(b) <= tol ? 1 : 0;
  const int low_bits = d / 2;
  const int high_bits = d - low_bits;
  auto half_sums = [&](int offset, int bits) {
    std::vector<double> s(std::size_t{1} << bits);
    for (std::size_t v = 0; v < s.size(); ++v) {
      double acc = 0.0;
      for (int j = 0; j < bits; ++j) acc += w[offset + j] * action_at(v, j);
      s[v] = acc;
    }
    return s;
  };
  const auto low = half_sums(0, low_bits);
  auto high = half_sums(low_bits, high_bits);
  std::sort(high.begin(), high.end());
  std::uint64_t count = 0;
  for (double l : low) {
    // |l + h - b| <= tol  <=>  b - l - tol <= h <= b - l + tol
    // widened by a rounding margin; the exact test below decides
    const double margin = 1e-12 * (1.0 + std::abs(b - l));
    auto first = std::lower_bound(high.begin(), high.end(), b - l - tol - margin);
    auto last = std::upper_bound(first, high.end(), b - l + tol + margin);
    for (auto it = first; it != last; ++it)
      if (std::abs(l + *it - b) <= tol) ++count;
  }
  return count;
}

}  // namespace lig
