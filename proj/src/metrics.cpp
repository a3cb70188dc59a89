// Redistribution indices, the truth-telling deviation search, and the
// rationality / budget / efficiency report.

#include "tfrm/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace tfrm {

IndexEstimate worst_case_ri(const MechanismFn& mechanism,
                            const MechanismParams& params,
                            const std::vector<BidProfile>& profiles) {
  IndexEstimate estimate;
  estimate.kind = IndexEstimate::Kind::WorstCase;
  estimate.value = std::numeric_limits<double>::infinity();
  for (const BidProfile& profile : profiles) {
    const Outcome out = mechanism(profile, params);
    const double collected = params.k * out.included_bids[params.k];
    if (collected <= 0.0) continue;  // zero-payment profiles carry no ratio
    double confirmed_rebates = 0.0;
    for (int s = 0; s < params.k; ++s) confirmed_rebates += out.rebates[s];
    estimate.value = std::min(estimate.value, confirmed_rebates / collected);
    ++estimate.sample_count;
  }
  estimate.defined = estimate.sample_count > 0;
  if (!estimate.defined) estimate.value = 0.0;
  return estimate;
}

IndexEstimate resilient_rri(const std::vector<ManipulationReport>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("resilient index needs at least one report");
  }
  IndexEstimate estimate;
  estimate.kind = IndexEstimate::Kind::ResilientWorstCase;
  estimate.value = std::numeric_limits<double>::infinity();
  for (const ManipulationReport& report : reports) {
    if (!report.rri_defined) continue;
    estimate.value = std::min(estimate.value, report.realized_rri);
    ++estimate.sample_count;
  }
  estimate.defined = estimate.sample_count > 0;
  if (!estimate.defined) estimate.value = 0.0;
  return estimate;
}

namespace {

// Utility of one mempool transaction under an outcome; 0 when excluded.
double utility_of(const Outcome& out, const BidProfile& profile,
                  std::size_t user) {
  for (std::size_t s = 0; s < out.included.size(); ++s) {
    if (out.included[s] != user) continue;
    const bool confirmed = s < static_cast<std::size_t>(out.confirmed_count);
    return (confirmed ? profile.valuations[user] : 0.0) - out.payments[s];
  }
  return 0.0;
}

}  // namespace

RuicResult check_ruic(const MechanismFn& mechanism,
                      const MechanismParams& params, const BidProfile& profile,
                      const std::vector<double>& deviation_grid) {
  profile.validate();
  if (!profile.has_valuations()) {
    throw std::invalid_argument("truth-telling check requires valuations");
  }
  if (profile.bids != profile.valuations) {
    throw std::invalid_argument(
        "truth-telling check starts from bids equal to valuations");
  }
  const Outcome truthful = mechanism(profile, params);

  RuicResult result;
  BidProfile deviated = profile;
  for (std::size_t s = 0; s < truthful.included.size(); ++s) {
    const std::size_t user = truthful.included[s];
    const double baseline = utility_of(truthful, profile, user);
    for (double bid : deviation_grid) {
      deviated.bids[user] = bid;
      const Outcome out = mechanism(deviated, params);
      const double utility = utility_of(out, profile, user);
      ++result.deviations_checked;
      if (utility > baseline + kTol) {
        result.pass = false;
        result.counterexample = {user, baseline, bid, utility};
        return result;
      }
    }
    deviated.bids[user] = profile.bids[user];
  }
  return result;
}

std::vector<double> make_deviation_grid(const BidProfile& profile,
                                        std::size_t points) {
  profile.validate();
  double top = 0.0;
  for (double b : profile.bids) top = std::max(top, b);
  std::vector<double> grid;
  grid.reserve(points + profile.bids.size());
  if (points == 1) {
    grid.push_back(0.0);
  } else {
    for (std::size_t i = 0; i < points; ++i) {
      grid.push_back(2.0 * top * static_cast<double>(i) / (points - 1));
    }
  }
  grid.insert(grid.end(), profile.bids.begin(), profile.bids.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

PropertyReport check_ir_and_budget(const MechanismFn& mechanism,
                                   const MechanismParams& params,
                                   const BidProfile& profile) {
  profile.validate();
  BidProfile truthful = profile;
  if (!truthful.has_valuations()) truthful.valuations = truthful.bids;

  const Outcome out = mechanism(truthful, params);
  const std::vector<double> utilities = user_utilities(out, truthful);

  PropertyReport report;
  report.ir_u = true;
  for (double u : utilities) report.ir_u = report.ir_u && u >= -kTol;
  report.miner_revenue = out.miner_revenue;
  report.ir_m = out.miner_revenue >= -kTol;
  double total_payment = 0.0;
  for (double p : out.payments) total_payment += p;
  report.wbb = total_payment >= -kTol;
  report.sbb = std::abs(total_payment) <= kTol;
  for (double r : out.rebates) report.rebate_sum += r;
  const double b_k = out.included_bids[params.k - 1];
  report.approx_ir_m = report.rebate_sum <= params.k * b_k + kTol;

  for (int s = 0; s < out.confirmed_count; ++s) {
    report.confirmed_value += truthful.valuations[out.included[s]];
  }
  const std::size_t m = truthful.bids.size();
  if (m <= 12) {
    // Exhaustive size-k subsets of the mempool.
    double best = 0.0;
    const std::size_t subsets = std::size_t{1} << m;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (std::popcount(mask) != params.k) continue;
      double value = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (mask & (std::size_t{1} << i)) value += truthful.valuations[i];
      }
      best = std::max(best, value);
    }
    report.best_confirmed_value = best;
  } else {
    std::vector<double> sorted = truthful.valuations;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (int s = 0; s < params.k; ++s) report.best_confirmed_value += sorted[s];
  }
  report.ae = report.confirmed_value >= report.best_confirmed_value - kTol;
  return report;
}

}  // namespace tfrm
