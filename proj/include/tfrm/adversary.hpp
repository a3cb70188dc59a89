#pragma once
// Myopic miner deviations. The miner may stuff the block with its own fake
// transactions; payments and rebates between the miner and its fakes cancel,
// so utility counts only flows against genuine users: gross price payments
// from genuine confirmed slots minus every rebate paid out to a genuine slot.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tfrm/core.hpp"
#include "tfrm/mechanisms.hpp"

namespace tfrm {

enum class MechanismKind { Spa, RTfrm, R2Tfrm };

struct FakeBid {
  std::size_t slot = 0;  // 0-based slot of the manipulated block
  double value = 0.0;
};

struct ManipulationReport {
  std::vector<FakeBid> fake_bids;
  std::vector<std::size_t> displaced;  // mempool indices pushed out of the block
  // Rebates granted to genuine confirmed slots; numerator of realized_rri.
  double genuine_rebate_sum = 0.0;
  // Gross price payments collected from genuine confirmed slots.
  double miner_payments_received = 0.0;
  // Every rebate flowing to a genuine slot, confirmed or not.
  double miner_rebates_paid_to_genuine = 0.0;
  double miner_utility = 0.0;  // received minus paid out
  double realized_rri = 0.0;   // genuine_rebate_sum / payments received
  bool rri_defined = false;    // false when no genuine payment was collected
};

// The miner keeps the top-k genuine transactions and replaces every
// price-setting slot with its own: a copy of the k-th genuine bid first,
// zeros below. Genuine slots keep their full rebate. The beacon overload
// evaluates the same block under the randomized mechanism, drawing each
// slot's rebate with probability params.alpha.
ManipulationReport impersonate_price_setters(const BidProfile& profile,
                                             const MechanismParams& params,
                                             const RebateCoefficients& coeffs);
ManipulationReport impersonate_price_setters(const BidProfile& profile,
                                             const MechanismParams& params,
                                             const RebateCoefficients& coeffs,
                                             const RandomnessBeacon& beacon);

// The miner inserts the given high fake bids; fakes and genuine bids compete
// for slots under the usual sorting rule (ties resolved genuine-first). When
// at least one fake makes the block, the miner also impersonates every
// genuine transaction left in a price-setting slot, replacing it with its own
// copy at the same bid, so no rebate leaks to an unconfirmed genuine user.
// With no fake included the honest outcome is reported unchanged.
ManipulationReport impersonate_confirmed(const BidProfile& profile,
                                         const MechanismParams& params,
                                         const RebateCoefficients& coeffs,
                                         std::span<const double> fake_high_bids);
ManipulationReport impersonate_confirmed(const BidProfile& profile,
                                         const MechanismParams& params,
                                         const RebateCoefficients& coeffs,
                                         std::span<const double> fake_high_bids,
                                         const RandomnessBeacon& beacon);

struct SearchOptions {
  std::vector<double> grid;          // candidate fake bid values
  std::size_t max_points = 2000000;  // enumeration budget
  // Spa ignores the schedule; R2Tfrm scores expected flows with params.alpha.
  MechanismKind kind = MechanismKind::RTfrm;
  // Called once per evaluated point; lets callers audit the whole search.
  std::function<void(const ManipulationReport&)> on_point;
};

// Default fake-bid value grid: the genuine bid values, midpoints between
// adjacent distinct values, 0, and twice the maximum.
std::vector<double> default_fake_grid(const BidProfile& profile);

// Exhaustive search over fake-bid multisets of size 0..n with values drawn
// from the grid, inserted under the sorting rule. Returns the utility
// maximizer; ties prefer fewer fakes, then lexicographically smaller values.
// Rejects searches whose enumeration exceeds max_points, reporting the size.
ManipulationReport search_optimal_manipulation(const BidProfile& profile,
                                               const MechanismParams& params,
                                               const RebateCoefficients& coeffs,
                                               const SearchOptions& options);

// Number of points such a search enumerates: sum over j <= n of the number
// of size-j multisets from a grid of the given size. Saturates at cap.
std::size_t search_space_size(std::size_t grid_size, int n,
                              std::size_t cap = ~std::size_t{0});

}  // namespace tfrm
