// Inclusion rule, second-price baseline, and utilities.

#include "tfrm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tfrm {

void BidProfile::validate() const {
  for (double b : bids) {
    if (!std::isfinite(b) || b < 0.0) {
      throw std::invalid_argument("bids must be finite and nonnegative");
    }
  }
  if (!valuations.empty()) {
    if (valuations.size() != bids.size()) {
      throw std::invalid_argument(
          "valuations must be empty or match the bid count");
    }
    for (double v : valuations) {
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument(
            "valuations must be finite and nonnegative");
      }
    }
  }
}

void MechanismParams::validate(bool requires_two_price_setters) const {
  if (n < 2) throw std::invalid_argument("block size n must be at least 2");
  if (k < 1) throw std::invalid_argument("confirmed count k must be positive");
  const int max_k = requires_two_price_setters ? n - 2 : n - 1;
  if (k > max_k) {
    throw std::invalid_argument(
        "k must be at most n-" +
        std::string(requires_two_price_setters ? "2" : "1") +
        " so a price-setting bid exists (got n=" + std::to_string(n) +
        ", k=" + std::to_string(k) + ")");
  }
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
}

Inclusion sort_and_include(const BidProfile& profile,
                           const MechanismParams& params) {
  profile.validate();
  if (params.n < 1) throw std::invalid_argument("block size n must be positive");
  const std::size_t m = profile.bids.size();
  if (m < static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("mempool has fewer transactions than slots");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (profile.bids[a] != profile.bids[b])
      return profile.bids[a] > profile.bids[b];
    return a < b;
  });
  Inclusion result;
  result.included.assign(order.begin(), order.begin() + params.n);
  result.residual.assign(order.begin() + params.n, order.end());
  return result;
}

Outcome spa_tfm(const BidProfile& profile, const MechanismParams& params) {
  params.validate(/*requires_two_price_setters=*/false);
  Outcome out;
  out.included = sort_and_include(profile, params).included;
  out.included_bids.reserve(out.included.size());
  for (std::size_t idx : out.included)
    out.included_bids.push_back(profile.bids[idx]);
  out.confirmed_count = params.k;
  const double price = out.included_bids[params.k];
  out.payments.assign(out.included.size(), 0.0);
  out.rebates.assign(out.included.size(), 0.0);
  for (int s = 0; s < params.k; ++s) out.payments[s] = price;
  out.miner_revenue = 0.0;
  for (double p : out.payments) out.miner_revenue += p;
  return out;
}

std::vector<double> user_utilities(const Outcome& outcome,
                                   const BidProfile& profile) {
  if (!profile.has_valuations()) {
    throw std::invalid_argument("utilities require valuations");
  }
  profile.validate();
  std::vector<double> utilities(profile.bids.size(), 0.0);
  for (std::size_t s = 0; s < outcome.included.size(); ++s) {
    const std::size_t idx = outcome.included[s];
    const bool confirmed = s < static_cast<std::size_t>(outcome.confirmed_count);
    utilities[idx] = (confirmed ? profile.valuations[idx] : 0.0) -
                     outcome.payments[s];
  }
  return utilities;
}

}  // namespace tfrm
