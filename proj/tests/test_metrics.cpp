// Redistribution indices, the included-user truthfulness check, and the
// rationality / budget / efficiency report.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tfrm/mechanisms.hpp"
#include "tfrm/metrics.hpp"
#include "tfrm/sampling.hpp"

using namespace tfrm;

namespace {

BidProfile profile_of(std::vector<double> bids) {
  BidProfile p;
  p.bids = std::move(bids);
  return p;
}

const BidProfile kTwoWhales = profile_of({100.0, 100.0, 10.0, 4.0, 4.0});
const MechanismParams kFiveThree{5, 3, 1.0};

MechanismFn optimal_rebate_mechanism() {
  return [](const BidProfile& p, const MechanismParams& params) {
    return r_tfrm(p, params, RebateCoefficients::optimal(params));
  };
}

MechanismFn second_price_mechanism() {
  return [](const BidProfile& p, const MechanismParams& params) {
    return spa_tfm(p, params);
  };
}

// Regression control: a second-price variant whose rebate tracks the slot's
// own bid, so raising one's bid raises one's refund.
MechanismFn own_bid_rebate_mechanism() {
  return [](const BidProfile& p, const MechanismParams& params) {
    Outcome out = spa_tfm(p, params);
    out.miner_revenue = 0.0;
    for (std::size_t s = 0; s < out.included_bids.size(); ++s) {
      const double r = 0.1 * out.included_bids[s];
      out.rebates[s] += r;
      out.payments[s] -= r;
      out.miner_revenue += out.payments[s];
    }
    return out;
  };
}

}  // namespace

// ---- redistribution indices ----

TEST_CASE("honest worst-case redistribution of the optimal schedule is k/n") {
  Rng rng(5);
  std::vector<BidProfile> profiles{kTwoWhales};
  for (int t = 0; t < 200; ++t) {
    BidProfile p;
    for (int i = 0; i < 5; ++i) p.bids.push_back(rng.uniform(0.1, 10.0));
    profiles.push_back(std::move(p));
  }
  const IndexEstimate est =
      worst_case_ri(optimal_rebate_mechanism(), kFiveThree, profiles);
  CHECK(est.defined);
  CHECK(est.kind == IndexEstimate::Kind::WorstCase);
  CHECK(est.sample_count == profiles.size());
  CHECK(est.value == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(est.standard_error == 0.0);
}

TEST_CASE("the second-price baseline redistributes nothing") {
  const IndexEstimate est = worst_case_ri(
      second_price_mechanism(), kFiveThree, {kTwoWhales});
  CHECK(est.defined);
  CHECK(est.value == 0.0);
}

TEST_CASE("profiles with no price payment are excluded from the index") {
  const BidProfile degenerate = profile_of({1.0, 0.0, 0.0, 0.0, 0.0});
  const IndexEstimate skipped = worst_case_ri(
      optimal_rebate_mechanism(), kFiveThree, {degenerate, kTwoWhales});
  CHECK(skipped.sample_count == 1);
  CHECK(skipped.value == doctest::Approx(0.6).epsilon(1e-12));
  const IndexEstimate empty = worst_case_ri(
      optimal_rebate_mechanism(), kFiveThree, {degenerate});
  CHECK_FALSE(empty.defined);
}

TEST_CASE("resilient index is the infimum over defined reports") {
  ManipulationReport a;
  a.realized_rri = 0.6;
  a.rri_defined = true;
  ManipulationReport b;
  b.realized_rri = 0.0;
  b.rri_defined = true;
  ManipulationReport undefined;
  undefined.realized_rri = 0.9;
  const IndexEstimate est = resilient_rri({a, b, undefined});
  CHECK(est.defined);
  CHECK(est.kind == IndexEstimate::Kind::ResilientWorstCase);
  CHECK(est.value == 0.0);
  CHECK(est.sample_count == 2);
  CHECK_FALSE(resilient_rri({undefined}).defined);
  CHECK_THROWS_AS(resilient_rri({}), std::invalid_argument);
}

// ---- truthfulness for included users ----

TEST_CASE("no included user gains by deviating under the optimal schedule") {
  BidProfile p = kTwoWhales;
  p.valuations = p.bids;
  const RuicResult result =
      check_ruic(optimal_rebate_mechanism(), kFiveThree, p,
                 make_deviation_grid(p, 200));
  CHECK(result.pass);
  CHECK_FALSE(result.counterexample.has_value());
  CHECK(result.deviations_checked > 0);
}

TEST_CASE("the expected randomized mechanism stays truthful") {
  BidProfile p = profile_of({10.0, 8.0, 6.0, 4.0, 2.0});
  p.valuations = p.bids;
  MechanismParams params = kFiveThree;
  params.alpha = 0.625;
  const MechanismFn mech = [](const BidProfile& prof,
                              const MechanismParams& par) {
    return r2_tfrm_expected(prof, par, RebateCoefficients::optimal(par));
  };
  const RuicResult result =
      check_ruic(mech, params, p, make_deviation_grid(p, 200));
  CHECK(result.pass);
}

TEST_CASE("an own-bid rebate is caught as a profitable deviation") {
  BidProfile p = profile_of({10.0, 8.0, 6.0, 4.0, 2.0});
  p.valuations = p.bids;
  const RuicResult result =
      check_ruic(own_bid_rebate_mechanism(), kFiveThree, p,
                 make_deviation_grid(p, 200));
  REQUIRE_FALSE(result.pass);
  REQUIRE(result.counterexample.has_value());
  CHECK(result.counterexample->deviated_utility >
        result.counterexample->truthful_utility + kTol);
}

TEST_CASE("the truthfulness check demands a truthful profile") {
  BidProfile no_valuations = kTwoWhales;
  CHECK_THROWS_AS(check_ruic(optimal_rebate_mechanism(), kFiveThree,
                             no_valuations, {1.0}),
                  std::invalid_argument);
  BidProfile shaded = kTwoWhales;
  shaded.valuations = shaded.bids;
  shaded.valuations[0] += 1.0;
  CHECK_THROWS_AS(
      check_ruic(optimal_rebate_mechanism(), kFiveThree, shaded, {1.0}),
      std::invalid_argument);
}

TEST_CASE("deviation grids span zero to twice the top bid plus breakpoints") {
  const BidProfile p = profile_of({10.0, 8.0, 5.0});
  const std::vector<double> grid = make_deviation_grid(p, 50);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 20.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (double b : p.bids) {
    CHECK(std::find(grid.begin(), grid.end(), b) != grid.end());
  }
  CHECK(grid.size() >= 50);
}

// ---- rationality, budget, efficiency ----

TEST_CASE("property report on the two-whale block under the rebate schedule") {
  const PropertyReport report = check_ir_and_budget(
      optimal_rebate_mechanism(), kFiveThree, kTwoWhales);
  CHECK(report.ir_u);
  CHECK_FALSE(report.ir_m);  // the miner pays out more than it collects
  CHECK(report.approx_ir_m);
  CHECK_FALSE(report.wbb);
  CHECK_FALSE(report.sbb);
  CHECK(report.ae);
  CHECK(report.miner_revenue == doctest::Approx(-7.2).epsilon(1e-12));
  CHECK(report.rebate_sum == doctest::Approx(19.2).epsilon(1e-12));
  CHECK(report.confirmed_value == doctest::Approx(210.0));
  CHECK(report.best_confirmed_value == doctest::Approx(210.0));
}

TEST_CASE("property report on the second-price baseline") {
  const PropertyReport report = check_ir_and_budget(
      second_price_mechanism(), {3, 2, 1.0}, profile_of({10.0, 8.0, 5.0}));
  CHECK(report.ir_u);
  CHECK(report.ir_m);
  CHECK(report.approx_ir_m);
  CHECK(report.wbb);
  CHECK_FALSE(report.sbb);  // revenue 10 is strictly positive
  CHECK(report.ae);
  CHECK(report.miner_revenue == doctest::Approx(10.0));
}

TEST_CASE("expected revenue at the revenue-neutral alpha balances the budget") {
  MechanismParams params = kFiveThree;
  params.alpha = 0.625;  // the two-whale revenue-neutral point
  const MechanismFn mech = [](const BidProfile& prof,
                              const MechanismParams& par) {
    return r2_tfrm_expected(prof, par, RebateCoefficients::optimal(par));
  };
  const PropertyReport report = check_ir_and_budget(mech, params, kTwoWhales);
  CHECK(report.ir_m);
  CHECK(report.wbb);
  CHECK(report.sbb);
  CHECK(std::abs(report.miner_revenue) < 1e-9);
}

TEST_CASE("a zero price-setting bid gives strong budget balance for free") {
  const PropertyReport report = check_ir_and_budget(
      second_price_mechanism(), {3, 2, 1.0}, profile_of({10.0, 0.0, 0.0}));
  CHECK(report.sbb);
  CHECK(report.miner_revenue == 0.0);
}

TEST_CASE("efficiency fails when valuations disagree with bids") {
  BidProfile p = profile_of({10.0, 8.0, 6.0, 4.0, 2.0});
  p.valuations = {1.0, 1.0, 1.0, 9.0, 9.0};
  const PropertyReport report =
      check_ir_and_budget(second_price_mechanism(), {5, 2, 1.0}, p);
  CHECK_FALSE(report.ae);
  CHECK(report.confirmed_value == doctest::Approx(2.0));
  CHECK(report.best_confirmed_value == doctest::Approx(18.0));
}

TEST_CASE("the efficiency enumerator agrees with the top-k shortcut") {
  // Thirteen transactions forces the sorted path; a manual enumeration over
  // every size-3 subset must agree with it.
  Rng rng(17);
  BidProfile p;
  for (int i = 0; i < 13; ++i) p.bids.push_back(rng.uniform(0.0, 10.0));
  const PropertyReport report = check_ir_and_budget(
      optimal_rebate_mechanism(), kFiveThree, p);
  double best = 0.0;
  for (std::size_t a = 0; a < p.bids.size(); ++a) {
    for (std::size_t b = a + 1; b < p.bids.size(); ++b) {
      for (std::size_t c = b + 1; c < p.bids.size(); ++c) {
        best = std::max(best, p.bids[a] + p.bids[b] + p.bids[c]);
      }
    }
  }
  CHECK(report.best_confirmed_value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("mechanism outcomes are invariant to mempool order") {
  const BidProfile shuffled = profile_of({4.0, 100.0, 10.0, 100.0, 4.0});
  const Outcome a = r_tfrm(kTwoWhales, kFiveThree,
                           RebateCoefficients::optimal(kFiveThree));
  const Outcome b = r_tfrm(shuffled, kFiveThree,
                           RebateCoefficients::optimal(kFiveThree));
  CHECK(a.included_bids == b.included_bids);
  CHECK(a.payments == b.payments);
  CHECK(a.rebates == b.rebates);
  CHECK(a.miner_revenue == b.miner_revenue);
}
