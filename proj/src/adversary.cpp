// Miner deviation strategies and the exhaustive fake-bid search.

#include "tfrm/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace tfrm {

namespace {

struct BlockSlot {
  double value = 0.0;
  bool genuine = false;
  std::size_t mempool_index = 0;  // meaningful only when genuine
};

// Flow accounting for one manipulated block, sorted non-increasing by value.
// Fake-to-fake transfers cancel; every rebate reaching a genuine slot is
// miner outflow, and only genuine confirmed slots pay the miner.
ManipulationReport evaluate_block(const std::vector<BlockSlot>& block,
                                  const MechanismParams& params,
                                  MechanismKind kind,
                                  const RebateCoefficients& coeffs,
                                  const RandomnessBeacon* beacon) {
  params.validate(kind != MechanismKind::Spa);
  const std::size_t n = block.size();
  std::vector<double> values(n);
  for (std::size_t s = 0; s < n; ++s) values[s] = block[s].value;

  const double price = values[params.k];
  ManipulationReport report;
  for (std::size_t s = 0; s < n; ++s) {
    double granted = 0.0;
    if (kind != MechanismKind::Spa) {
      const double scheduled = evaluate_rebate(coeffs, values, s);
      double scale = 1.0;
      if (kind == MechanismKind::R2Tfrm) {
        scale = beacon ? (beacon->draw(s, params.alpha) ? 1.0 : 0.0)
                       : params.alpha;
      }
      granted = scale * scheduled;
    }
    if (block[s].genuine) {
      report.miner_rebates_paid_to_genuine += granted;
      if (s < static_cast<std::size_t>(params.k)) {
        report.miner_payments_received += price;
        report.genuine_rebate_sum += granted;
      }
    } else {
      report.fake_bids.push_back({s, values[s]});
    }
  }
  report.miner_utility =
      report.miner_payments_received - report.miner_rebates_paid_to_genuine;
  if (report.miner_payments_received > 0.0) {
    report.realized_rri =
        report.genuine_rebate_sum / report.miner_payments_received;
    report.rri_defined = true;
  }
  return report;
}

std::vector<BlockSlot> price_setter_block(const BidProfile& profile,
                                          const MechanismParams& params,
                                          std::vector<std::size_t>* displaced) {
  const Inclusion inc = sort_and_include(profile, params);
  std::vector<BlockSlot> block;
  block.reserve(params.n);
  for (int s = 0; s < params.k; ++s) {
    block.push_back({profile.bids[inc.included[s]], true, inc.included[s]});
  }
  // First price-setting slot copies the k-th genuine bid, the rest bid zero.
  block.push_back({block.back().value, false, 0});
  for (int s = params.k + 1; s < params.n; ++s) block.push_back({0.0, false, 0});
  if (displaced) {
    displaced->assign(inc.included.begin() + params.k, inc.included.end());
  }
  return block;
}

struct PoolEntry {
  double value = 0.0;
  bool genuine = false;
  std::size_t index = 0;  // mempool index, or fake ordinal
};

// Sorting rule with fakes in the pool: value descending, genuine wins ties,
// then submission order.
std::vector<PoolEntry> sorted_pool(const BidProfile& profile,
                                   std::span<const double> fakes) {
  std::vector<PoolEntry> pool;
  pool.reserve(profile.bids.size() + fakes.size());
  for (std::size_t i = 0; i < profile.bids.size(); ++i) {
    pool.push_back({profile.bids[i], true, i});
  }
  for (std::size_t i = 0; i < fakes.size(); ++i) {
    if (!std::isfinite(fakes[i]) || fakes[i] < 0.0) {
      throw std::invalid_argument("fake bids must be finite and nonnegative");
    }
    pool.push_back({fakes[i], false, i});
  }
  std::sort(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.genuine != b.genuine) return a.genuine;
    return a.index < b.index;
  });
  return pool;
}

std::vector<std::size_t> honest_minus(const BidProfile& profile,
                                      const MechanismParams& params,
                                      const std::set<std::size_t>& kept) {
  std::vector<std::size_t> displaced;
  for (std::size_t idx : sort_and_include(profile, params).included) {
    if (!kept.contains(idx)) displaced.push_back(idx);
  }
  return displaced;
}

ManipulationReport impersonate_confirmed_impl(const BidProfile& profile,
                                              const MechanismParams& params,
                                              const RebateCoefficients& coeffs,
                                              std::span<const double> fakes,
                                              const RandomnessBeacon* beacon) {
  params.validate(/*requires_two_price_setters=*/true);
  profile.validate();
  if (profile.bids.size() < static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("mempool has fewer transactions than slots");
  }
  const MechanismKind kind =
      beacon ? MechanismKind::R2Tfrm : MechanismKind::RTfrm;

  const std::vector<PoolEntry> pool = sorted_pool(profile, fakes);
  std::vector<BlockSlot> block;
  block.reserve(params.n);
  bool any_fake = false;
  for (int s = 0; s < params.n; ++s) {
    const PoolEntry& e = pool[s];
    block.push_back({e.value, e.genuine, e.index});
    any_fake = any_fake || !e.genuine;
  }
  std::set<std::size_t> kept;
  if (any_fake) {
    // Impersonate every genuine transaction left in a price-setting slot:
    // same bid value, miner-owned, so its rebate stops being an outflow.
    for (int s = params.k; s < params.n; ++s) block[s].genuine = false;
  }
  for (const BlockSlot& slot : block) {
    if (slot.genuine) kept.insert(slot.mempool_index);
  }
  ManipulationReport report =
      evaluate_block(block, params, kind, coeffs, beacon);
  report.displaced = honest_minus(profile, params, kept);
  return report;
}

}  // namespace

ManipulationReport impersonate_price_setters(const BidProfile& profile,
                                             const MechanismParams& params,
                                             const RebateCoefficients& coeffs) {
  params.validate(/*requires_two_price_setters=*/true);
  profile.validate();
  std::vector<std::size_t> displaced;
  const auto block = price_setter_block(profile, params, &displaced);
  ManipulationReport report =
      evaluate_block(block, params, MechanismKind::RTfrm, coeffs, nullptr);
  report.displaced = std::move(displaced);
  return report;
}

ManipulationReport impersonate_price_setters(const BidProfile& profile,
                                             const MechanismParams& params,
                                             const RebateCoefficients& coeffs,
                                             const RandomnessBeacon& beacon) {
  params.validate(/*requires_two_price_setters=*/true);
  profile.validate();
  std::vector<std::size_t> displaced;
  const auto block = price_setter_block(profile, params, &displaced);
  ManipulationReport report =
      evaluate_block(block, params, MechanismKind::R2Tfrm, coeffs, &beacon);
  report.displaced = std::move(displaced);
  return report;
}

ManipulationReport impersonate_confirmed(const BidProfile& profile,
                                         const MechanismParams& params,
                                         const RebateCoefficients& coeffs,
                                         std::span<const double> fake_high_bids) {
  return impersonate_confirmed_impl(profile, params, coeffs, fake_high_bids,
                                    nullptr);
}

ManipulationReport impersonate_confirmed(const BidProfile& profile,
                                         const MechanismParams& params,
                                         const RebateCoefficients& coeffs,
                                         std::span<const double> fake_high_bids,
                                         const RandomnessBeacon& beacon) {
  return impersonate_confirmed_impl(profile, params, coeffs, fake_high_bids,
                                    &beacon);
}

std::vector<double> default_fake_grid(const BidProfile& profile) {
  std::vector<double> values = profile.bids;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> grid;
  grid.push_back(0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    grid.push_back(values[i]);
    if (i + 1 < values.size()) {
      grid.push_back(0.5 * (values[i] + values[i + 1]));
    }
  }
  grid.push_back(values.empty() ? 1.0 : 2.0 * values.back());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::size_t search_space_size(std::size_t grid_size, int n, std::size_t cap) {
  if (grid_size == 0 || n < 0) return 1;  // the empty manipulation
  unsigned __int128 total = 0;
  unsigned __int128 term = 1;  // C(grid_size + j - 1, j), starting at j = 0
  for (int j = 0; j <= n; ++j) {
    total += term;
    if (total > cap) return cap;
    term = term * (grid_size + j) / (j + 1);
  }
  return static_cast<std::size_t>(total);
}

ManipulationReport search_optimal_manipulation(const BidProfile& profile,
                                               const MechanismParams& params,
                                               const RebateCoefficients& coeffs,
                                               const SearchOptions& options) {
  params.validate(options.kind != MechanismKind::Spa);
  profile.validate();
  if (profile.bids.size() < static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("mempool has fewer transactions than slots");
  }
  if (options.grid.empty()) {
    throw std::invalid_argument("search grid must not be empty");
  }
  for (double g : options.grid) {
    if (!std::isfinite(g) || g < 0.0) {
      throw std::invalid_argument("grid values must be finite and nonnegative");
    }
  }
  const std::size_t space =
      search_space_size(options.grid.size(), params.n, options.max_points + 1);
  if (space > options.max_points) {
    throw std::invalid_argument(
        "search space has at least " + std::to_string(space) +
        " points, above the budget of " + std::to_string(options.max_points));
  }

  std::vector<double> grid = options.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  ManipulationReport best;
  std::vector<double> best_fakes;
  bool have_best = false;
  std::vector<double> fakes;

  auto consider = [&](const std::vector<double>& candidate) {
    const std::vector<PoolEntry> pool = sorted_pool(profile, candidate);
    std::vector<BlockSlot> block;
    block.reserve(params.n);
    std::set<std::size_t> kept;
    for (int s = 0; s < params.n; ++s) {
      const PoolEntry& e = pool[s];
      block.push_back({e.value, e.genuine, e.index});
      if (e.genuine) kept.insert(e.index);
    }
    ManipulationReport report =
        evaluate_block(block, params, options.kind, coeffs, nullptr);
    report.displaced = honest_minus(profile, params, kept);
    if (options.on_point) options.on_point(report);
    constexpr double tie = 1e-12;
    const bool better =
        !have_best || report.miner_utility > best.miner_utility + tie ||
        (report.miner_utility > best.miner_utility - tie &&
         (candidate.size() < best_fakes.size() ||
          (candidate.size() == best_fakes.size() && candidate < best_fakes)));
    if (better) {
      best = std::move(report);
      best_fakes = candidate;
      have_best = true;
    }
  };

  // Non-increasing value tuples enumerate each multiset exactly once.
  auto enumerate = [&](auto&& self, std::size_t max_grid_pos) -> void {
    consider(fakes);
    if (fakes.size() == static_cast<std::size_t>(params.n)) return;
    for (std::size_t g = max_grid_pos; g-- > 0;) {
      fakes.push_back(grid[g]);
      self(self, g + 1);
      fakes.pop_back();
    }
  };
  enumerate(enumerate, grid.size());
  return best;
}

}  // namespace tfrm
