#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/game.hpp"

namespace lig {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets: one joint action per line as a string of '+' and '-'.

inline void write_dataset(std::ostream& out, const JointActionDataset& data) {
  for (std::size_t l = 0; l < data.m(); ++l) {
    for (int i = 0; i < data.n(); ++i) out << (data.at(l, i) > 0 ? '+' : '-');
    out << '\n';
  }
}

inline JointActionDataset read_dataset(std::istream& in) {
  std::vector<std::int8_t> flat;
  int n = 0;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (n == 0) n = static_cast<int>(line.size());
    if (static_cast<int>(line.size()) != n)
      throw ParseError("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(n) + " actions, got " +
                       std::to_string(line.size()));
    for (char c : line) {
      if (c != '+' && c != '-')
        throw ParseError("dataset line " + std::to_string(lineno) + ": invalid action character '" + std::string(1, c) + "'");
      flat.push_back(c == '+' ? 1 : -1);
    }
  }
  if (flat.empty()) throw ParseError("dataset is empty");
  return {n, std::move(flat)};
}

inline JointActionDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path);
  return read_dataset(in);
}

// ---------------------------------------------------------------------------
// Games as JSON: {"n": n, "W": [[...], ...], "b": [...]}

inline nlohmann::json game_to_json(const InfluenceGame& g) {
  nlohmann::json w = nlohmann::json::array();
  for (int i = 0; i < g.n(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < g.n(); ++j) row.push_back(g.weights()(i, j));
    w.push_back(std::move(row));
  }
  nlohmann::json b = nlohmann::json::array();
  for (int i = 0; i < g.n(); ++i) b.push_back(g.thresholds()(i));
  return {{"n", g.n()}, {"W", std::move(w)}, {"b", std::move(b)}};
}

inline InfluenceGame game_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    Eigen::MatrixXd w(n, n);
    Eigen::VectorXd b(n);
    const auto& jw = j.at("W");
    const auto& jb = j.at("b");
    if (static_cast<int>(jw.size()) != n || static_cast<int>(jb.size()) != n) throw ParseError("game JSON shape does not match n");
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(jw[i].size()) != n) throw ParseError("game JSON row " + std::to_string(i) + " has wrong length");
      for (int k = 0; k < n; ++k) w(i, k) = jw[i][k].get<double>();
      b(i) = jb[i].get<double>();
    }
    return {std::move(w), std::move(b)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed game JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Roll-call votes CSV: a header of player names, an optional row of party
// labels (D, R, I), then one row per vote event. yea maps to +1; nay,
// abstain and absent map to -1.

struct VoteRecord {
  JointActionDataset data;
  std::vector<std::string> names;
  std::vector<std::string> parties;  // empty when the file has no party row
};

inline VoteRecord parse_votes(std::istream& in) {
  std::vector<std::string> names, parties;
  std::vector<std::int8_t> flat;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, ',');
    if (!header) {
      names = fields;
      for (const auto& nm : names)
        if (nm.empty()) throw ParseError("votes line " + std::to_string(lineno) + ": empty player name");
      header = true;
      continue;
    }
    if (fields.size() != names.size())
      throw ParseError("votes line " + std::to_string(lineno) + ": expected " + std::to_string(names.size()) +
                       " fields, got " + std::to_string(fields.size()));
    if (parties.empty() && flat.empty() &&
        std::all_of(fields.begin(), fields.end(), [](const std::string& f) { return f == "D" || f == "R" || f == "I"; })) {
      parties = fields;
      continue;
    }
    for (const auto& f : fields) {
      const auto t = detail::lower(f);
      if (t == "yea") flat.push_back(1);
      else if (t == "nay" || t == "abstain" || t == "absent") flat.push_back(-1);
      else throw ParseError("votes line " + std::to_string(lineno) + ": unknown vote token '" + f + "'");
    }
  }
  if (!header) throw ParseError("votes file is empty");
  if (flat.empty()) throw ParseError("votes file has no vote rows");
  return {JointActionDataset(static_cast<int>(names.size()), std::move(flat)), std::move(names), std::move(parties)};
}

inline VoteRecord read_votes_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open votes file " + path);
  return parse_votes(in);
}

/// Party quotas for a subset of size k by largest-remainder rounding. Equal
/// remainders go to the larger party, then to the earlier label.
inline std::map<std::string, std::size_t> party_quotas(const std::vector<std::string>& parties, std::size_t k) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& p : parties) ++sizes[p];
  const auto total = parties.size();
  std::map<std::string, std::size_t> quota;
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> rems;  // (remainder numerator, size, label)
  std::size_t assigned = 0;
  for (const auto& [p, s] : sizes) {
    quota[p] = s * k / total;
    assigned += quota[p];
    rems.emplace_back(s * k % total, s, p);
  }
  std::sort(rems.begin(), rems.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  for (std::size_t r = 0; assigned < k; ++r, ++assigned) ++quota[std::get<2>(rems[r])];
  return quota;
}

/// Stratified random subset of k players, preserving party proportions.
/// Without party labels the subset is a plain random sample. The returned
/// player indices are ascending.
inline std::vector<int> stratified_subset(const VoteRecord& rec, std::size_t k, std::uint64_t seed) {
  const auto n = rec.names.size();
  detail::require<ArgumentError>(k >= 1 && k <= n, "subset size must lie in [1, number of players]");
  std::vector<std::string> labels = rec.parties.empty() ? std::vector<std::string>(n, "*") : rec.parties;
  const auto quota = party_quotas(labels, k);
  std::mt19937_64 rng(seed);
  std::vector<int> chosen;
  for (const auto& [p, want] : quota) {
    std::vector<int> pool;
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == p) pool.push_back(static_cast<int>(i));
    for (std::size_t t = 0; t < want; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
      std::swap(pool[t], pool[pick(rng)]);
      chosen.push_back(pool[t]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

inline VoteRecord select_players(const VoteRecord& rec, const std::vector<int>& which) {
  VoteRecord out{rec.data.players(which), {}, {}};
  for (int i : which) {
    out.names.push_back(rec.names[static_cast<std::size_t>(i)]);
    if (!rec.parties.empty()) out.parties.push_back(rec.parties[static_cast<std::size_t>(i)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flat key = value configuration; '#' starts a comment.

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ParseError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  return parse_key_values(in);
}

}  // namespace lig
