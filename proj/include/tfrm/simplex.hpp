#pragma once
// Dense two-phase tableau simplex with Bland's rule. Maximizes c.x subject
// to A x <= b over free variables (split into nonnegative parts internally).
// Sized for the tiny programs this project solves: tens of variables, around
// a hundred rows.

#include <stdexcept>
#include <string>
#include <vector>

namespace tfrm {

struct LpProblem {
  std::vector<double> objective;         // maximize objective . x
  std::vector<std::vector<double>> lhs;  // one row per constraint
  std::vector<double> rhs;
};

struct LpSolution {
  std::vector<double> x;
  double objective_value = 0.0;
};

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws LpError when the program is infeasible or unbounded.
LpSolution solve_simplex(const LpProblem& problem);

}  // namespace tfrm
