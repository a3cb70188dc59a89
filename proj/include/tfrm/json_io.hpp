#pragma once
// JSON wire formats. Bid profiles travel as {"bids": [...], "valuations":
// [...]} with valuations optional; solved schedules as {"n", "k", "f", "c"}
// with c holding all n coefficients. Report serializers mirror the struct
// fields one to one.

#include <nlohmann/json.hpp>

#include "tfrm/adversary.hpp"
#include "tfrm/core.hpp"
#include "tfrm/mechanisms.hpp"
#include "tfrm/metrics.hpp"
#include "tfrm/rebate_lp.hpp"

namespace tfrm {

using json = nlohmann::json;

BidProfile bid_profile_from_json(const json& j);
json to_json(const BidProfile& profile);

// {"n": ..., "k": ..., "f": ..., "c": [...]}; c must have n entries.
RebateCoefficients coefficients_from_json(const json& j, int expected_n = -1);
json to_json(const RebateCoefficients& coeffs, const MechanismParams& params);

json to_json(const Outcome& outcome);
json to_json(const ManipulationReport& report);
json to_json(const IndexEstimate& estimate);
json to_json(const PropertyReport& report);
json to_json(const RuicResult& result);
json to_json(const ReducedLP& lp);

}  // namespace tfrm
