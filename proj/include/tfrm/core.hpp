#pragma once
// Block-building primitives shared by every fee mechanism in the lab:
// the mempool snapshot, block geometry, inclusion rule, the plain
// second-price baseline, and per-user quasi-linear utilities.

#include <cstddef>
#include <vector>

namespace tfrm {

// Shared absolute tolerance for every floating-point equality check.
inline constexpr double kTol = 1e-9;

// Mempool snapshot. bids[i] is transaction i's fee bid. valuations are
// optional; utility and incentive checks require them.
struct BidProfile {
  std::vector<double> bids;
  std::vector<double> valuations;  // empty, or exactly one entry per bid

  bool has_valuations() const { return !valuations.empty(); }
  // Rejects negative or non-finite entries and valuation size mismatches.
  void validate() const;
};

// Block geometry: n included slots, the top k confirmed. Rebate mechanisms
// need two price-setting slots (k <= n-2); the second-price baseline needs
// one (k <= n-1). alpha is the rebate-granting probability and is read only
// by the randomized mechanism.
struct MechanismParams {
  int n = 0;
  int k = 0;
  double alpha = 1.0;

  void validate(bool requires_two_price_setters) const;
};

// Result of running a mechanism once. Slot-parallel vectors follow the
// included order: descending bid, ties by ascending submission index.
// Payments are signed; a negative payment is a transfer to the transaction.
struct Outcome {
  std::vector<std::size_t> included;  // mempool indices, size n
  std::vector<double> included_bids;  // bid per slot, non-increasing
  std::vector<double> payments;       // per slot
  std::vector<double> rebates;        // granted rebate per slot, >= 0
  int confirmed_count = 0;
  double miner_revenue = 0.0;  // sum of payments over all slots
};

struct Inclusion {
  std::vector<std::size_t> included;  // size n, descending bid
  std::vector<std::size_t> residual;  // mempool indices left out
};

// Top-n selection: descending bid, ties broken by ascending submission
// index. Rejects mempools with fewer than n transactions.
Inclusion sort_and_include(const BidProfile& profile,
                           const MechanismParams& params);

// Second-price baseline: each confirmed slot pays the (k+1)-th included
// bid, every other slot pays 0, no rebates.
Outcome spa_tfm(const BidProfile& profile, const MechanismParams& params);

// Utility per mempool transaction: confirmed get valuation - payment, other
// included get -payment, excluded get 0. Requires valuations.
std::vector<double> user_utilities(const Outcome& outcome,
                                   const BidProfile& profile);

}  // namespace tfrm
