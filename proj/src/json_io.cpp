// JSON (de)serialization for the wire formats.

#include "tfrm/json_io.hpp"

#include <stdexcept>
#include <string>

namespace tfrm {

namespace {

std::vector<double> number_array(const json& j, const std::string& field) {
  if (!j.is_array()) {
    throw std::invalid_argument("field '" + field + "' must be an array");
  }
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& entry : j) {
    if (!entry.is_number()) {
      throw std::invalid_argument("field '" + field +
                                  "' must contain only numbers");
    }
    values.push_back(entry.get<double>());
  }
  return values;
}

}  // namespace

BidProfile bid_profile_from_json(const json& j) {
  if (!j.is_object() || !j.contains("bids")) {
    throw std::invalid_argument("bid profile needs a 'bids' array");
  }
  BidProfile profile;
  profile.bids = number_array(j.at("bids"), "bids");
  if (j.contains("valuations")) {
    profile.valuations = number_array(j.at("valuations"), "valuations");
  }
  profile.validate();
  return profile;
}

json to_json(const BidProfile& profile) {
  json j;
  j["bids"] = profile.bids;
  if (profile.has_valuations()) j["valuations"] = profile.valuations;
  return j;
}

RebateCoefficients coefficients_from_json(const json& j, int expected_n) {
  if (!j.is_object() || !j.contains("f") || !j.contains("c")) {
    throw std::invalid_argument("schedule needs 'f' and 'c' fields");
  }
  RebateCoefficients coeffs;
  coeffs.f = j.at("f").get<double>();
  coeffs.c = number_array(j.at("c"), "c");
  if (j.contains("n") &&
      j.at("n").get<int>() != static_cast<int>(coeffs.c.size())) {
    throw std::invalid_argument("'n' disagrees with the length of 'c'");
  }
  if (expected_n >= 0 && coeffs.c.size() != static_cast<std::size_t>(expected_n)) {
    throw std::invalid_argument("schedule length must equal block size");
  }
  return coeffs;
}

json to_json(const RebateCoefficients& coeffs, const MechanismParams& params) {
  return json{{"n", params.n},
              {"k", params.k},
              {"f", coeffs.f},
              {"c", coeffs.c}};
}

json to_json(const Outcome& outcome) {
  return json{{"included", outcome.included},
              {"included_bids", outcome.included_bids},
              {"payments", outcome.payments},
              {"rebates", outcome.rebates},
              {"confirmed_count", outcome.confirmed_count},
              {"miner_revenue", outcome.miner_revenue}};
}

json to_json(const ManipulationReport& report) {
  json fakes = json::array();
  for (const FakeBid& fake : report.fake_bids) {
    fakes.push_back(json{{"slot", fake.slot}, {"value", fake.value}});
  }
  json j{{"fake_bids", fakes},
         {"displaced", report.displaced},
         {"genuine_rebate_sum", report.genuine_rebate_sum},
         {"miner_payments_received", report.miner_payments_received},
         {"miner_rebates_paid_to_genuine", report.miner_rebates_paid_to_genuine},
         {"miner_utility", report.miner_utility},
         {"rri_defined", report.rri_defined}};
  if (report.rri_defined) j["realized_rri"] = report.realized_rri;
  return j;
}

json to_json(const IndexEstimate& estimate) {
  const char* kind = "worst-case";
  if (estimate.kind == IndexEstimate::Kind::Average) kind = "average";
  if (estimate.kind == IndexEstimate::Kind::ResilientWorstCase) {
    kind = "resilient-worst-case";
  }
  return json{{"kind", kind},
              {"value", estimate.value},
              {"sample_count", estimate.sample_count},
              {"standard_error", estimate.standard_error},
              {"defined", estimate.defined}};
}

json to_json(const PropertyReport& report) {
  return json{{"ir_u", report.ir_u},
              {"ir_m", report.ir_m},
              {"approx_ir_m", report.approx_ir_m},
              {"wbb", report.wbb},
              {"sbb", report.sbb},
              {"ae", report.ae},
              {"miner_revenue", report.miner_revenue},
              {"rebate_sum", report.rebate_sum},
              {"confirmed_value", report.confirmed_value},
              {"best_confirmed_value", report.best_confirmed_value}};
}

json to_json(const RuicResult& result) {
  json j{{"pass", result.pass},
         {"deviations_checked", result.deviations_checked}};
  if (result.counterexample) {
    j["counterexample"] = json{
        {"user", result.counterexample->user},
        {"truthful_utility", result.counterexample->truthful_utility},
        {"deviation", result.counterexample->deviation},
        {"deviated_utility", result.counterexample->deviated_utility}};
  }
  return j;
}

json to_json(const ReducedLP& lp) {
  return json{{"n", lp.n},
              {"k", lp.k},
              {"variables", lp.variables},
              {"lhs", lp.lhs},
              {"rhs", lp.rhs},
              {"row_labels", lp.row_labels},
              {"objective", lp.objective}};
}

}  // namespace tfrm
