#pragma once

#include <stdexcept>
#include <string>

namespace lig {

/// Malformed input: dimension mismatch, out-of-range parameter, bad token.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem size above a hard enumeration or solver cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A mixture model that does not define a valid PMF.
class InvalidModelError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite values produced during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// LP solver failure (unbounded or stalled).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class E>
inline void require(bool cond, const std::string& what) {
  if (!cond) throw E(what);
}

}  // namespace detail
}  // namespace lig
