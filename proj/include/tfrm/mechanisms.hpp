#pragma once
// Rebate mechanisms: a linear rebate schedule over the sorted included bids,
// the deterministic mechanism built from it, a randomized variant that grants
// each rebate with probability alpha, and the witness construction showing
// why anonymous own-bid-independent rebates cannot be confined to confirmed
// slots.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tfrm/core.hpp"

namespace tfrm {

// Linear rebate schedule. c[0] is a constant term; c[j] for j >= 1 multiplies
// the j-th highest of the other n-1 included bids, so a slot's rebate never
// depends on its own bid. f is the confirmed-rebate fraction the schedule
// guarantees in the worst case.
struct RebateCoefficients {
  std::vector<double> c;  // size n
  double f = 0.0;

  // The unique optimum of the reduced program: c[k] = k/n, every other
  // entry 0, f = k/n.
  static RebateCoefficients optimal(const MechanismParams& params);
};

// Rebate of slot i (0-based) given the full sorted included bid vector.
// Rejects unsorted input, size mismatches, and out-of-range slots.
double evaluate_rebate(const RebateCoefficients& coeffs,
                       std::span<const double> included_bids, std::size_t i);

// Deterministic rebate mechanism: confirmed slots pay b_{k+1} - r_i, every
// other included slot pays -r_j. Needs k <= n-2.
Outcome r_tfrm(const BidProfile& profile, const MechanismParams& params,
               const RebateCoefficients& coeffs);

// Per-slot Bernoulli indicators, reproducible from a 64-bit seed and
// independent across slot indices.
class RandomnessBeacon {
 public:
  explicit RandomnessBeacon(std::uint64_t seed) : seed_(seed) {}

  double uniform(std::size_t index) const;           // [0, 1)
  bool draw(std::size_t index, double alpha) const;  // uniform(index) < alpha
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
};

// Randomized variant: each included slot keeps its rebate only when the
// beacon fires for that slot. alpha = 1 reproduces r_tfrm exactly; alpha = 0
// reproduces the second-price payments.
Outcome r2_tfrm(const BidProfile& profile, const MechanismParams& params,
                const RebateCoefficients& coeffs,
                const RandomnessBeacon& beacon);

// Expected-payment version of r2_tfrm: every rebate scaled by alpha. Used by
// the expectation-form incentive and revenue checks.
Outcome r2_tfrm_expected(const BidProfile& profile,
                         const MechanismParams& params,
                         const RebateCoefficients& coeffs);

// Largest alpha that keeps expected miner revenue nonnegative:
//   n * b_{k+1} / (k * b_{k+1} + (n-k) * b_k).
// When b_{k+1} = 0 every payment is already 0; the bound is reported as 1
// and flagged degenerate.
struct AlphaBound {
  double value = 1.0;
  bool degenerate = false;
};
AlphaBound alpha_upper_bound(std::span<const double> included_bids,
                             const MechanismParams& params);

// Anonymous own-bid-independent rebate: maps the other n-1 included bids
// (descending) to a rebate value.
using RebateTable =
    std::function<double(std::span<const double> others)>;

// Counterexample to the "rebates only for confirmed slots" design. If some
// confirmed slot of `profile` earns a positive rebate under `table`, returns
// a profile whose last, unconfirmed slot earns that same rebate: drop the
// probed slot's own bid and duplicate the lowest remaining bid, so the last
// slot sees exactly the same other-bid vector.
struct IdealWitness {
  std::vector<double> profile;      // descending, size n
  double unconfirmed_rebate = 0.0;  // table value forced onto the last slot
};
std::optional<IdealWitness> ideal_tfrm_witness(const RebateTable& table,
                                               const BidProfile& profile,
                                               const MechanismParams& params);

}  // namespace tfrm
