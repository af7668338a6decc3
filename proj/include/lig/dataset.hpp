#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "lig/error.hpp"
#include "lig/joint_action.hpp"

namespace lig {

struct UniqueAction {
  JointAction action;
  std::size_t count = 0;
};

/// m observed joint actions over n players, stored row-major, with the
/// frequency view (unique actions by count desc, then index asc).
class JointActionDataset {
 public:
  JointActionDataset(int n, std::vector<std::int8_t> flat) : n_(n), data_(std::move(flat)) {
    detail::require<ArgumentError>(n_ >= 1, "dataset needs at least one player");
    detail::require<ArgumentError>(!data_.empty() && data_.size() % static_cast<std::size_t>(n_) == 0,
                                   "dataset needs m >= 1 complete samples");
    for (auto a : data_) detail::require<ArgumentError>(a == 1 || a == -1, "actions must be -1 or +1");
    build_unique();
  }

  JointActionDataset(int n, const std::vector<JointAction>& samples)
      : JointActionDataset(n, flatten(n, samples)) {}

  static JointActionDataset from_indices(int n, std::span<const ActionIndex> indices) {
    std::vector<std::int8_t> flat;
    flat.reserve(indices.size() * static_cast<std::size_t>(n));
    for (auto idx : indices)
      for (int i = 0; i < n; ++i) flat.push_back(static_cast<std::int8_t>(action_at(idx, i)));
    return {n, std::move(flat)};
  }

  int n() const { return n_; }
  std::size_t m() const { return data_.size() / static_cast<std::size_t>(n_); }

  std::span<const std::int8_t> sample(std::size_t l) const {
    return {data_.data() + l * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  int at(std::size_t l, int i) const { return data_[l * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)]; }
  ActionIndex index(std::size_t l) const {
    detail::require<ArgumentError>(n_ <= kMaxIndexedPlayers, "sample too long for integer index");
    ActionIndex idx = 0;
    for (int i = 0; i < n_; ++i)
      if (at(l, i) > 0) idx |= ActionIndex{1} << i;
    return idx;
  }

  const std::vector<UniqueAction>& unique() const { return unique_; }

  JointActionDataset rows(std::span<const std::size_t> which) const {
    std::vector<std::int8_t> flat;
    flat.reserve(which.size() * static_cast<std::size_t>(n_));
    for (auto l : which) {
      detail::require<ArgumentError>(l < m(), "row index out of range");
      auto s = sample(l);
      flat.insert(flat.end(), s.begin(), s.end());
    }
    return {n_, std::move(flat)};
  }

  JointActionDataset players(std::span<const int> which) const {
    std::vector<std::int8_t> flat;
    flat.reserve(m() * which.size());
    for (std::size_t l = 0; l < m(); ++l)
      for (int i : which) {
        detail::require<ArgumentError>(i >= 0 && i < n_, "player index out of range");
        flat.push_back(static_cast<std::int8_t>(at(l, i)));
      }
    return {static_cast<int>(which.size()), std::move(flat)};
  }

 private:
  static std::vector<std::int8_t> flatten(int n, const std::vector<JointAction>& samples) {
    std::vector<std::int8_t> flat;
    for (const auto& x : samples) {
      detail::require<ArgumentError>(x.size() == n, "sample length does not match n");
      flat.insert(flat.end(), x.view().begin(), x.view().end());
    }
    return flat;
  }

  void build_unique() {
    std::vector<std::size_t> order(m());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return index_less(sample(a), sample(b)); });
    for (std::size_t k = 0; k < order.size();) {
      std::size_t e = k + 1;
      while (e < order.size() && std::ranges::equal(sample(order[e]), sample(order[k]))) ++e;
      auto s = sample(order[k]);
      unique_.push_back({JointAction(std::vector<std::int8_t>(s.begin(), s.end())), e - k});
      k = e;
    }
    // already ascending by index; stable sort keeps that as the tie-break
    std::stable_sort(unique_.begin(), unique_.end(),
                     [](const UniqueAction& a, const UniqueAction& b) { return a.count > b.count; });
  }

  int n_;
  std::vector<std::int8_t> data_;
  std::vector<UniqueAction> unique_;
};

}  // namespace lig
