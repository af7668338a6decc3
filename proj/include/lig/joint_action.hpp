#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lig/error.hpp"

namespace lig {

using ActionIndex = std::uint64_t;

/// Largest player count whose joint actions fit an ActionIndex.
inline constexpr int kMaxIndexedPlayers = 63;

/// A joint action x in {-1,+1}^n. Bit i of the integer index is set iff x_i = +1.
class JointAction {
 public:
  JointAction() = default;

  explicit JointAction(std::vector<std::int8_t> actions) : actions_(std::move(actions)) {
    detail::require<ArgumentError>(!actions_.empty(), "joint action needs at least one player");
    for (auto a : actions_)
      detail::require<ArgumentError>(a == 1 || a == -1, "joint action entries must be -1 or +1");
  }

  static JointAction from_index(int n, ActionIndex index) {
    detail::require<ArgumentError>(n >= 1 && n <= kMaxIndexedPlayers,
                                   "player count out of range for index encoding");
    detail::require<ArgumentError>(n == kMaxIndexedPlayers || index < (ActionIndex{1} << n),
                                   "action index out of range");
    std::vector<std::int8_t> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[i] = ((index >> i) & 1U) ? 1 : -1;
    JointAction x;
    x.actions_ = std::move(a);
    return x;
  }

  ActionIndex index() const {
    detail::require<ArgumentError>(size() <= kMaxIndexedPlayers,
                                   "joint action too long for integer index");
    ActionIndex idx = 0;
    for (int i = 0; i < size(); ++i)
      if (actions_[i] > 0) idx |= ActionIndex{1} << i;
    return idx;
  }

  int size() const { return static_cast<int>(actions_.size()); }
  std::int8_t operator[](int i) const { return actions_[static_cast<std::size_t>(i)]; }
  std::span<const std::int8_t> view() const { return actions_; }

  std::string to_string() const {
    std::string s;
    for (auto a : actions_) s += a > 0 ? '+' : '-';
    return s;
  }

  friend bool operator==(const JointAction&, const JointAction&) = default;

 private:
  std::vector<std::int8_t> actions_;
};

/// Ordering consistent with the integer index for any length (player n-1 is the
/// most significant bit).
inline bool index_less(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  for (std::size_t k = a.size(); k-- > 0;) {
    if (a[k] != b[k]) return a[k] < b[k];
  }
  return false;
}

inline int action_at(ActionIndex index, int i) { return ((index >> i) & 1U) ? 1 : -1; }

}  // namespace lig
