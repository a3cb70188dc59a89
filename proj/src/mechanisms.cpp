// Linear rebate schedules, the deterministic and randomized mechanisms, the
// revenue-neutral alpha bound, and the anonymity witness construction.

#include "tfrm/mechanisms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tfrm/sampling.hpp"

namespace tfrm {

RebateCoefficients RebateCoefficients::optimal(const MechanismParams& params) {
  params.validate(/*requires_two_price_setters=*/true);
  RebateCoefficients coeffs;
  coeffs.c.assign(params.n, 0.0);
  coeffs.c[params.k] = static_cast<double>(params.k) / params.n;
  coeffs.f = static_cast<double>(params.k) / params.n;
  return coeffs;
}

double evaluate_rebate(const RebateCoefficients& coeffs,
                       std::span<const double> included_bids, std::size_t i) {
  const std::size_t n = included_bids.size();
  if (coeffs.c.size() != n) {
    throw std::invalid_argument("schedule length must equal block size");
  }
  if (i >= n) throw std::invalid_argument("slot index out of range");
  for (std::size_t s = 1; s < n; ++s) {
    if (included_bids[s - 1] < included_bids[s]) {
      throw std::invalid_argument("included bids must be non-increasing");
    }
  }
  // c[j] multiplies the j-th highest of the other bids; dropping slot i
  // shifts every later bid up one rank.
  double rebate = coeffs.c[0];
  for (std::size_t j = 1; j < n; ++j) {
    const double other = (j - 1 < i) ? included_bids[j - 1] : included_bids[j];
    rebate += coeffs.c[j] * other;
  }
  return rebate;
}

namespace {

// Shared skeleton: inclusion, sorted bids, price. rebate_scale(slot) returns
// the granted fraction of that slot's scheduled rebate.
template <typename ScaleFn>
Outcome run_rebate_mechanism(const BidProfile& profile,
                             const MechanismParams& params,
                             const RebateCoefficients& coeffs,
                             ScaleFn rebate_scale) {
  params.validate(/*requires_two_price_setters=*/true);
  Outcome out;
  out.included = sort_and_include(profile, params).included;
  out.included_bids.reserve(out.included.size());
  for (std::size_t idx : out.included)
    out.included_bids.push_back(profile.bids[idx]);
  out.confirmed_count = params.k;
  const double price = out.included_bids[params.k];
  const std::size_t n = out.included.size();
  out.payments.assign(n, 0.0);
  out.rebates.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double scheduled = evaluate_rebate(coeffs, out.included_bids, s);
    const double granted = rebate_scale(s) * scheduled;
    out.rebates[s] = granted;
    out.payments[s] =
        (s < static_cast<std::size_t>(params.k)) ? price - granted : -granted;
  }
  out.miner_revenue = 0.0;
  for (double p : out.payments) out.miner_revenue += p;
  return out;
}

}  // namespace

Outcome r_tfrm(const BidProfile& profile, const MechanismParams& params,
               const RebateCoefficients& coeffs) {
  return run_rebate_mechanism(profile, params, coeffs,
                              [](std::size_t) { return 1.0; });
}

double RandomnessBeacon::uniform(std::size_t index) const {
  // One splitmix64 step on a seed/index mix; indices get independent values.
  std::uint64_t state =
      seed_ + (static_cast<std::uint64_t>(index) + 1) * 0x9E3779B97F4A7C15ULL;
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

bool RandomnessBeacon::draw(std::size_t index, double alpha) const {
  return uniform(index) < alpha;
}

Outcome r2_tfrm(const BidProfile& profile, const MechanismParams& params,
                const RebateCoefficients& coeffs,
                const RandomnessBeacon& beacon) {
  return run_rebate_mechanism(profile, params, coeffs, [&](std::size_t s) {
    return beacon.draw(s, params.alpha) ? 1.0 : 0.0;
  });
}

Outcome r2_tfrm_expected(const BidProfile& profile,
                         const MechanismParams& params,
                         const RebateCoefficients& coeffs) {
  return run_rebate_mechanism(profile, params, coeffs,
                              [&](std::size_t) { return params.alpha; });
}

AlphaBound alpha_upper_bound(std::span<const double> included_bids,
                             const MechanismParams& params) {
  params.validate(/*requires_two_price_setters=*/true);
  if (included_bids.size() != static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("bid vector length must equal block size");
  }
  for (std::size_t s = 1; s < included_bids.size(); ++s) {
    if (included_bids[s - 1] < included_bids[s]) {
      throw std::invalid_argument("included bids must be non-increasing");
    }
  }
  const double b_k = included_bids[params.k - 1];
  const double b_k1 = included_bids[params.k];
  AlphaBound bound;
  if (b_k1 <= 0.0) {
    // Every payment is zero already; any alpha keeps revenue at zero.
    bound.value = 1.0;
    bound.degenerate = true;
    return bound;
  }
  bound.value = params.n * b_k1 / (params.k * b_k1 + (params.n - params.k) * b_k);
  return bound;
}

std::optional<IdealWitness> ideal_tfrm_witness(const RebateTable& table,
                                               const BidProfile& profile,
                                               const MechanismParams& params) {
  params.validate(/*requires_two_price_setters=*/true);
  const Inclusion inc = sort_and_include(profile, params);
  std::vector<double> bids;
  bids.reserve(inc.included.size());
  for (std::size_t idx : inc.included) bids.push_back(profile.bids[idx]);

  for (int slot = 0; slot < params.k; ++slot) {
    std::vector<double> others;
    others.reserve(bids.size() - 1);
    for (std::size_t s = 0; s < bids.size(); ++s) {
      if (s != static_cast<std::size_t>(slot)) others.push_back(bids[s]);
    }
    const double rebate = table(others);
    if (rebate > kTol) {
      // The last slot of (others..., min(others)) sees exactly `others` as
      // its other-bid vector, so the table forces the same rebate there.
      IdealWitness witness;
      witness.profile = others;
      witness.profile.push_back(others.back());
      witness.unconfirmed_rebate = rebate;
      return witness;
    }
  }
  return std::nullopt;
}

}  // namespace tfrm
