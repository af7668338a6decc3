#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lig/error.hpp"

namespace lig::lp {

/// Refuse tableaux with more entries than this (about 240 MB of doubles).
inline constexpr double kTableauCap = 3e7;

struct Result {
  Eigen::VectorXd x;  // primal solution of the packing LP
  Eigen::VectorXd y;  // row multipliers: solution of the covering dual
  double objective = 0.0;
  int pivots = 0;
};

/// max c'x  s.t.  A x <= r, x >= 0, with r >= 0 so the slack basis is feasible.
/// Dense tableau primal simplex: Dantzig pricing, switching to Bland's rule
/// while pivots are degenerate. At optimality y solves
/// min r'y  s.t.  A'y >= c, y >= 0, and r'y = c'x.
inline Result solve_packing(const Eigen::MatrixXd& a, const Eigen::VectorXd& r, const Eigen::VectorXd& c,
                            int max_pivots = 200000) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  detail::require<ArgumentError>(r.size() == rows && c.size() == cols, "LP shape mismatch");
  detail::require<ArgumentError>(rows > 0 && cols > 0, "empty LP");
  detail::require<ArgumentError>(r.minCoeff() >= 0.0, "packing LP needs a non-negative right-hand side");
  detail::require<CapacityError>(static_cast<double>(rows + 1) * static_cast<double>(cols + rows + 1) <= kTableauCap,
                                 "LP too large for the dense simplex: " + std::to_string(rows) + " rows x " +
                                     std::to_string(cols) + " columns");

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index width = cols + rows + 1;
  const Eigen::Index rhs = width - 1;
  RowMatrix t = RowMatrix::Zero(rows + 1, width);
  t.topLeftCorner(rows, cols) = a;
  for (Eigen::Index i = 0; i < rows; ++i) {
    t(i, cols + i) = 1.0;
    t(i, rhs) = r(i);
  }
  t.row(rows).head(cols) = c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = cols + i;

  constexpr double kCostTol = 1e-10;
  constexpr double kPivotTol = 1e-9;
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  Result res;
  int degenerate_run = 0;
  Eigen::RowVectorXd pivot_row(width);
  Eigen::VectorXd pivot_col(rows + 1);
  for (;;) {
    const bool bland = degenerate_run > 50;
    Eigen::Index enter = -1;
    double best = kCostTol * scale;
    for (Eigen::Index j = 0; j < rhs; ++j) {
      const double d = t(rows, j);
      if (d > best) {
        enter = j;
        if (bland) break;
        best = d;
      }
    }
    if (enter < 0) break;
    detail::require<SolverError>(res.pivots < max_pivots, "simplex pivot limit reached");

    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double v = t(i, enter);
      if (v <= kPivotTol) continue;
      const double rt = t(i, rhs) / v;
      if (rt < ratio - 1e-14 ||
          (rt <= ratio + 1e-14 && leave >= 0 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        ratio = std::min(ratio, rt);
        leave = i;
      }
    }
    if (leave < 0)
      throw SolverError("LP unbounded along column " + std::to_string(enter) +
                        " (no positive entry in the pivot column)");
    degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;

    pivot_row = t.row(leave) / t(leave, enter);
    for (Eigen::Index j = 0; j < width; ++j)
      if (std::abs(pivot_row(j)) < 1e-14) pivot_row(j) = 0.0;
    pivot_row(enter) = 1.0;
    pivot_col = t.col(enter);
    pivot_col(leave) = 0.0;
    t.noalias() -= pivot_col * pivot_row;
    t.row(leave) = pivot_row;
    t.col(enter).setZero();
    t(leave, enter) = 1.0;
    for (Eigen::Index i = 0; i < rows; ++i)
      if (t(i, rhs) < 0.0 && t(i, rhs) > -1e-11) t(i, rhs) = 0.0;
    basis[static_cast<std::size_t>(leave)] = enter;
    ++res.pivots;
  }

  res.x = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    if (basis[static_cast<std::size_t>(i)] < cols) res.x(basis[static_cast<std::size_t>(i)]) = t(i, rhs);
  res.y = (-t.row(rows).segment(cols, rows)).transpose().cwiseMax(0.0);
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace lig::lp
