#pragma once
// The reduced linear program behind the optimal rebate schedule: maximize the
// guaranteed confirmed-rebate fraction f over schedules that are feasible for
// every bid profile. The bid-wise requirements (last slot's rebate
// nonnegative, total rebate at most k*b_k, confirmed rebates at least
// f*k*b_{k+1}) collapse to finitely many rows over (f, c_k..c_{n-1}).

#include <cstddef>
#include <string>
#include <vector>

#include "tfrm/adversary.hpp"
#include "tfrm/core.hpp"
#include "tfrm/mechanisms.hpp"

namespace tfrm {

// Rows are inequalities lhs . x <= rhs over x = (f, c_k, ..., c_{n-1}).
// Row count is always 2*(n-k) + 1.
struct ReducedLP {
  int n = 0;
  int k = 0;
  std::vector<std::string> variables;  // "f", "c<k>", ..., "c<n-1>"
  std::vector<std::vector<double>> lhs;
  std::vector<double> rhs;
  std::vector<std::string> row_labels;
  std::vector<double> objective;  // maximize objective . x
};

// Needs k <= n-2. The zero vector is always feasible (f = 0).
ReducedLP build_reduced_lp(const MechanismParams& params);

// Solves the program with the in-tree simplex and expands the result to a
// full schedule: c_0..c_{k-1} are 0 (any nonzero value is infeasible
// bid-wise), the solved entries fill c_k..c_{n-1}.
RebateCoefficients solve_lp(const ReducedLP& lp);

struct BidwiseViolation {
  std::string constraint;
  std::vector<double> profile;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct BidwiseReport {
  std::size_t profiles_checked = 0;
  std::vector<BidwiseViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Replays the bid-wise requirements against concrete sorted profiles:
// r_n >= 0, sum of rebates <= k*b_k, confirmed rebates >= f*k*b_{k+1}.
// Profiles must be non-increasing with n entries each.
BidwiseReport verify_bidwise_constraints(
    const RebateCoefficients& coeffs, const MechanismParams& params,
    const std::vector<std::vector<double>>& profiles);

// Deviation showing that schedules paying only on tail positions (c_j = 0
// for every j <= k) redistribute nothing: the miner keeps the top-k genuine
// transactions, bids the k-th genuine value in the first price-setting slot
// and zero below. Every genuine rebate vanishes while the miner collects
// k * b_k. Rejects schedules not in tail-only form.
ManipulationReport tail_only_deviation(const RebateCoefficients& coeffs,
                                       const BidProfile& profile,
                                       const MechanismParams& params);

}  // namespace tfrm
