#pragma once
// Evaluation indices and property checks: redistribution fractions (honest
// and under manipulation), incentive compatibility for included users via
// grid deviation search, and the individual-rationality / budget / efficiency
// report.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tfrm/adversary.hpp"
#include "tfrm/core.hpp"

namespace tfrm {

struct IndexEstimate {
  enum class Kind { WorstCase, Average, ResilientWorstCase };
  Kind kind = Kind::WorstCase;
  double value = 0.0;
  std::size_t sample_count = 0;    // degenerate samples excluded
  double standard_error = 0.0;     // 0 for extremal estimates
  bool defined = false;            // false when every sample was degenerate
};

// Any mechanism under test, honest view: its outcome on a profile.
using MechanismFn =
    std::function<Outcome(const BidProfile&, const MechanismParams&)>;

// Minimum over profiles of (confirmed rebate sum) / (k * b_{k+1}).
// Profiles with zero price payments are excluded from the minimum.
IndexEstimate worst_case_ri(const MechanismFn& mechanism,
                            const MechanismParams& params,
                            const std::vector<BidProfile>& profiles);

// Infimum of realized_rri over the given manipulation reports; reports whose
// ratio is undefined (no genuine payment collected) are skipped.
IndexEstimate resilient_rri(const std::vector<ManipulationReport>& reports);

struct RuicCounterexample {
  std::size_t user = 0;  // mempool index
  double truthful_utility = 0.0;
  double deviation = 0.0;  // the bid that improved on truth-telling
  double deviated_utility = 0.0;
};

struct RuicResult {
  bool pass = true;
  std::optional<RuicCounterexample> counterexample;
  std::size_t deviations_checked = 0;
};

// Truth-telling check for included users: requires valuations equal to bids,
// then tries every grid bid for every included user, holding the others
// fixed. Fails as soon as some deviation beats the truthful utility by more
// than the shared tolerance.
RuicResult check_ruic(const MechanismFn& mechanism,
                      const MechanismParams& params, const BidProfile& profile,
                      const std::vector<double>& deviation_grid);

// Deviation grid covering [0, 2*max bid] with `points` evenly spaced values
// plus every bid in the profile (the exact breakpoints of the outcome).
std::vector<double> make_deviation_grid(const BidProfile& profile,
                                        std::size_t points);

struct PropertyReport {
  bool ir_u = false;         // every included user weakly gains at truth
  bool ir_m = false;         // miner revenue nonnegative
  bool approx_ir_m = false;  // rebate sum at most k * b_k
  bool wbb = false;          // total payment to the miner nonnegative
  bool sbb = false;          // total payment exactly zero
  bool ae = false;           // confirmed set maximizes total valuation
  double miner_revenue = 0.0;
  double rebate_sum = 0.0;
  double confirmed_value = 0.0;       // valuation sum of the confirmed set
  double best_confirmed_value = 0.0;  // best achievable over size-k subsets
};

// Runs the mechanism at the truthful profile (bids double as valuations when
// none are given) and evaluates the properties above. The efficiency check
// enumerates all size-k subsets for mempools of at most 12 transactions and
// compares against the top-k valuation sum above that.
PropertyReport check_ir_and_budget(const MechanismFn& mechanism,
                                   const MechanismParams& params,
                                   const BidProfile& profile);

}  // namespace tfrm
