// Two-phase dense tableau simplex. Free variables are split into positive
// and negative parts; rows with negative right-hand sides are flipped to
// >= form and given surplus + artificial columns. Bland's rule (smallest
// eligible column, smallest basic label on ratio ties) rules out cycling on
// the degenerate vertices these programs have.

#include "tfrm/simplex.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

namespace tfrm {

namespace {

constexpr double kCostEps = 1e-10;   // reduced-cost threshold for entering
constexpr double kPivotEps = 1e-9;   // minimum pivot magnitude
constexpr double kFeasEps = 1e-8;    // phase-1 residual treated as zero

struct Tableau {
  std::size_t rows = 0;
  std::size_t cols = 0;  // structural + slack/surplus + artificial
  std::size_t art_start = 0;
  std::vector<std::vector<double>> a;  // rows x cols
  std::vector<double> b;               // nonnegative throughout
  std::vector<std::size_t> basis;      // basic column per row
  std::vector<double> cost;            // reduced costs for current basis
  double value = 0.0;

  void pivot(std::size_t r, std::size_t e) {
    const double inv = 1.0 / a[r][e];
    for (auto& entry : a[r]) entry *= inv;
    b[r] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][e] == 0.0) continue;
      const double factor = a[i][e];
      for (std::size_t j = 0; j < cols; ++j) a[i][j] -= factor * a[r][j];
      a[i][e] = 0.0;  // keep the unit column exact
      b[i] -= factor * b[r];
      if (b[i] < 0.0 && b[i] > -kFeasEps) b[i] = 0.0;
    }
    if (cost[e] != 0.0) {
      const double factor = cost[e];
      for (std::size_t j = 0; j < cols; ++j) cost[j] -= factor * a[r][j];
      cost[e] = 0.0;
      value += factor * b[r];
    }
    basis[r] = e;
  }

  // Returns false when no reduced cost is positive (optimal basis).
  bool improve(bool allow_artificial) {
    const std::size_t iteration_cap = 50000 + 200 * (rows + cols);
    for (std::size_t iter = 0; iter < iteration_cap; ++iter) {
      std::size_t entering = cols;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!allow_artificial && j >= art_start) break;
        if (cost[j] > kCostEps) {
          entering = j;
          break;  // Bland: smallest eligible column
        }
      }
      if (entering == cols) return true;

      std::size_t leaving = rows;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows; ++i) {
        if (a[i][entering] <= kPivotEps) continue;
        const double ratio = b[i] / a[i][entering];
        if (ratio < best_ratio - kCostEps ||
            (ratio < best_ratio + kCostEps &&
             (leaving == rows || basis[i] < basis[leaving]))) {
          best_ratio = ratio;
          leaving = i;
        }
      }
      if (leaving == rows) throw LpError("linear program is unbounded");
      pivot(leaving, entering);
    }
    throw LpError("simplex iteration limit exceeded");
  }
};

}  // namespace

LpSolution solve_simplex(const LpProblem& problem) {
  const std::size_t d = problem.objective.size();
  const std::size_t m = problem.lhs.size();
  if (problem.rhs.size() != m) throw LpError("rhs size mismatch");
  for (const auto& row : problem.lhs) {
    if (row.size() != d) throw LpError("lhs row size mismatch");
  }

  // Column layout: d positive parts, d negative parts, m slack/surplus,
  // then one artificial per flipped row.
  std::size_t artificial_count = 0;
  for (double rhs : problem.rhs) {
    if (rhs < 0.0) ++artificial_count;
  }
  Tableau t;
  t.rows = m;
  t.art_start = 2 * d + m;
  t.cols = t.art_start + artificial_count;
  t.a.assign(m, std::vector<double>(t.cols, 0.0));
  t.b.assign(m, 0.0);
  t.basis.assign(m, 0);

  std::size_t next_artificial = t.art_start;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = problem.rhs[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      t.a[i][j] = sign * problem.lhs[i][j];
      t.a[i][d + j] = -sign * problem.lhs[i][j];
    }
    t.b[i] = sign * problem.rhs[i];
    t.a[i][2 * d + i] = sign;  // slack for <=, surplus for flipped rows
    if (sign < 0.0) {
      t.a[i][next_artificial] = 1.0;
      t.basis[i] = next_artificial++;
    } else {
      t.basis[i] = 2 * d + i;
    }
  }

  if (artificial_count > 0) {
    // Phase 1: maximize minus the artificial sum, priced out over the
    // artificial basis.
    t.cost.assign(t.cols, 0.0);
    t.value = 0.0;
    for (std::size_t j = t.art_start; j < t.cols; ++j) t.cost[j] = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] < t.art_start) continue;
      for (std::size_t j = 0; j < t.cols; ++j) t.cost[j] += t.a[i][j];
      t.value -= t.b[i];
    }
    t.improve(/*allow_artificial=*/true);
    if (t.value < -kFeasEps) throw LpError("linear program is infeasible");
    // Drive leftover artificials out of the basis; their rows sit at zero, so
    // any nonzero pivot entry works. Rows with none are redundant and inert.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] < t.art_start) continue;
      for (std::size_t j = 0; j < t.art_start; ++j) {
        if (std::abs(t.a[i][j]) > kPivotEps) {
          t.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2: original objective on the split variables, priced out.
  t.cost.assign(t.cols, 0.0);
  t.value = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    t.cost[j] = problem.objective[j];
    t.cost[d + j] = -problem.objective[j];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t basic = t.basis[i];
    if (basic >= t.art_start) continue;
    double c_basic = 0.0;
    if (basic < d) {
      c_basic = problem.objective[basic];
    } else if (basic < 2 * d) {
      c_basic = -problem.objective[basic - d];
    }
    if (c_basic == 0.0) continue;
    for (std::size_t j = 0; j < t.cols; ++j) t.cost[j] -= c_basic * t.a[i][j];
    t.value += c_basic * t.b[i];
  }
  t.improve(/*allow_artificial=*/false);

  LpSolution solution;
  solution.x.assign(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t basic = t.basis[i];
    if (basic < d) {
      solution.x[basic] += t.b[i];
    } else if (basic < 2 * d) {
      solution.x[basic - d] -= t.b[i];
    }
  }
  solution.objective_value = t.value;
  return solution;
}

}  // namespace tfrm
