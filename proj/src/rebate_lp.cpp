// Reduced program construction, its simplex solution, bid-wise replay of the
// constraints, and the tail-only deviation report.

#include "tfrm/rebate_lp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tfrm/simplex.hpp"

namespace tfrm {

ReducedLP build_reduced_lp(const MechanismParams& params) {
  params.validate(/*requires_two_price_setters=*/true);
  const int n = params.n;
  const int k = params.k;
  const int tail = n - k;  // number of c variables: c_k .. c_{n-1}
  ReducedLP lp;
  lp.n = n;
  lp.k = k;
  lp.variables.push_back("f");
  for (int j = k; j < n; ++j) lp.variables.push_back("c" + std::to_string(j));
  const std::size_t dim = lp.variables.size();

  auto add_row = [&](std::vector<double> row, double rhs, std::string label) {
    lp.lhs.push_back(std::move(row));
    lp.rhs.push_back(rhs);
    lp.row_labels.push_back(std::move(label));
  };

  // Guarantee rows: f <= sum_{j=k}^{i} c_j for every prefix of the tail.
  for (int i = k; i < n; ++i) {
    std::vector<double> row(dim, 0.0);
    row[0] = 1.0;
    for (int j = k; j <= i; ++j) row[1 + (j - k)] = -1.0;
    add_row(std::move(row), 0.0, "guarantee-prefix-" + std::to_string(i));
  }
  // Revenue cap from the profile paying only on the k-th value.
  {
    std::vector<double> row(dim, 0.0);
    row[1] = static_cast<double>(tail);
    add_row(std::move(row), static_cast<double>(k), "cap-first");
  }
  // Revenue cap from the all-equal profile.
  {
    std::vector<double> row(dim, 0.0);
    for (int j = 0; j < tail; ++j) row[1 + j] = static_cast<double>(n);
    add_row(std::move(row), static_cast<double>(k), "cap-total");
  }
  // Revenue caps from profiles flat through position k+i, zero after.
  for (int i = 1; i <= tail - 1; ++i) {
    std::vector<double> row(dim, 0.0);
    for (int j = 0; j < i; ++j) row[1 + j] = static_cast<double>(n);
    row[1 + i] = static_cast<double>(tail - i);
    add_row(std::move(row), static_cast<double>(k),
            "cap-prefix-" + std::to_string(i));
  }

  lp.objective.assign(dim, 0.0);
  lp.objective[0] = 1.0;
  return lp;
}

RebateCoefficients solve_lp(const ReducedLP& lp) {
  LpProblem problem;
  problem.objective = lp.objective;
  problem.lhs = lp.lhs;
  problem.rhs = lp.rhs;
  const LpSolution solution = solve_simplex(problem);

  RebateCoefficients coeffs;
  coeffs.f = solution.x[0];
  coeffs.c.assign(lp.n, 0.0);
  for (int j = lp.k; j < lp.n; ++j) coeffs.c[j] = solution.x[1 + (j - lp.k)];
  return coeffs;
}

BidwiseReport verify_bidwise_constraints(
    const RebateCoefficients& coeffs, const MechanismParams& params,
    const std::vector<std::vector<double>>& profiles) {
  params.validate(/*requires_two_price_setters=*/true);
  BidwiseReport report;
  for (const auto& bids : profiles) {
    if (bids.size() != static_cast<std::size_t>(params.n)) {
      throw std::invalid_argument("profile length must equal block size");
    }
    double rebate_sum = 0.0;
    double confirmed_sum = 0.0;
    double last_rebate = 0.0;
    for (int s = 0; s < params.n; ++s) {
      const double r = evaluate_rebate(coeffs, bids, s);
      rebate_sum += r;
      if (s < params.k) confirmed_sum += r;
      if (s == params.n - 1) last_rebate = r;
    }
    const double b_k = bids[params.k - 1];
    const double b_k1 = bids[params.k];
    if (last_rebate < -kTol) {
      report.violations.push_back(
          {"last-slot-rebate-nonnegative", bids, last_rebate, 0.0});
    }
    if (rebate_sum > params.k * b_k + kTol) {
      report.violations.push_back(
          {"rebate-sum-at-most-k-bk", bids, rebate_sum, params.k * b_k});
    }
    if (confirmed_sum < coeffs.f * params.k * b_k1 - kTol) {
      report.violations.push_back({"confirmed-rebates-reach-fraction", bids,
                                   confirmed_sum,
                                   coeffs.f * params.k * b_k1});
    }
    ++report.profiles_checked;
  }
  return report;
}

ManipulationReport tail_only_deviation(const RebateCoefficients& coeffs,
                                       const BidProfile& profile,
                                       const MechanismParams& params) {
  params.validate(/*requires_two_price_setters=*/true);
  if (coeffs.c.size() != static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("schedule length must equal block size");
  }
  for (int j = 0; j <= params.k; ++j) {
    if (std::abs(coeffs.c[j]) > kTol) {
      throw std::invalid_argument(
          "schedule is not tail-only: c" + std::to_string(j) +
          " = " + std::to_string(coeffs.c[j]) +
          " but every coefficient through c" + std::to_string(params.k) +
          " must be zero");
    }
  }
  // Identical block to the price-setter impersonation; only the schedule
  // differs, and on it every genuine rebate evaluates over zero tail bids.
  return impersonate_price_setters(profile, params, coeffs);
}

}  // namespace tfrm
