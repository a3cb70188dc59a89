// Inclusion rule, second-price baseline, and utility accounting.

#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "tfrm/core.hpp"

using namespace tfrm;

namespace {

BidProfile profile_of(std::vector<double> bids) {
  BidProfile p;
  p.bids = std::move(bids);
  return p;
}

}  // namespace

// ---- validation ----

TEST_CASE("bid profiles reject non-finite and negative entries") {
  CHECK_THROWS_AS(profile_of({1.0, -0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(profile_of({1.0 / 0.0}).validate(), std::invalid_argument);
  CHECK_NOTHROW(profile_of({0.0, 3.5}).validate());
}

TEST_CASE("valuations must be empty or match the bid count") {
  BidProfile p = profile_of({3.0, 2.0, 1.0});
  CHECK_FALSE(p.has_valuations());
  p.valuations = {3.0, 2.0};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.valuations = {3.0, 2.0, 1.0};
  CHECK(p.has_valuations());
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("mechanism params enforce the price-setter headroom") {
  MechanismParams params{5, 4, 1.0};
  // One price setter suffices for the second-price rule.
  CHECK_NOTHROW(params.validate(false));
  // Rebate mechanisms need two: k at most n-2.
  CHECK_THROWS_AS(params.validate(true), std::invalid_argument);
  params.k = 5;
  CHECK_THROWS_AS(params.validate(false), std::invalid_argument);
  params.k = 0;
  CHECK_THROWS_AS(params.validate(false), std::invalid_argument);
  params = {5, 3, 1.5};
  CHECK_THROWS_AS(params.validate(true), std::invalid_argument);
}

// ---- inclusion ----

TEST_CASE("inclusion keeps the n highest bids in sorted order") {
  const BidProfile p = profile_of({4.0, 10.0, 8.0, 5.0});
  const Inclusion inc = sort_and_include(p, {3, 1, 1.0});
  CHECK(inc.included == std::vector<std::size_t>{1, 2, 3});
  CHECK(inc.residual == std::vector<std::size_t>{0});
}

TEST_CASE("inclusion breaks ties by ascending mempool index") {
  const BidProfile p = profile_of({7.0, 7.0, 7.0, 7.0});
  const Inclusion inc = sort_and_include(p, {3, 1, 1.0});
  CHECK(inc.included == std::vector<std::size_t>{0, 1, 2});
  CHECK(inc.residual == std::vector<std::size_t>{3});
}

TEST_CASE("inclusion needs at least n mempool transactions") {
  const BidProfile p = profile_of({3.0, 2.0});
  CHECK_THROWS_AS(sort_and_include(p, {3, 1, 1.0}), std::invalid_argument);
}

// ---- second-price baseline ----

TEST_CASE("second-price confirmed slots pay the price-setting bid") {
  const Outcome out = spa_tfm(profile_of({10.0, 8.0, 5.0}), {3, 2, 1.0});
  CHECK(out.confirmed_count == 2);
  CHECK(out.included_bids == std::vector<double>{10.0, 8.0, 5.0});
  CHECK(out.payments == std::vector<double>{5.0, 5.0, 0.0});
  CHECK(out.rebates == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(out.miner_revenue == 10.0);
}

TEST_CASE("second-price with a zero price-setting bid collects nothing") {
  const Outcome out = spa_tfm(profile_of({10.0, 0.0, 0.0}), {3, 2, 1.0});
  CHECK(out.payments == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(out.miner_revenue == 0.0);
}

TEST_CASE("second-price sorts an unsorted mempool before charging") {
  const Outcome out = spa_tfm(profile_of({4.0, 10.0, 8.0, 5.0}), {3, 2, 1.0});
  CHECK(out.included == std::vector<std::size_t>{1, 2, 3});
  CHECK(out.payments == std::vector<double>{5.0, 5.0, 0.0});
  CHECK(out.miner_revenue == 10.0);
}

TEST_CASE("second-price permits k = n-1 but not k = n") {
  const BidProfile p = profile_of({10.0, 8.0, 5.0});
  CHECK_NOTHROW(spa_tfm(p, {3, 2, 1.0}));
  CHECK_THROWS_AS(spa_tfm(p, {3, 3, 1.0}), std::invalid_argument);
}

// ---- utilities ----

TEST_CASE("utilities: confirmed get value minus payment, others the rebate") {
  BidProfile p = profile_of({10.0, 8.0, 5.0, 2.0});
  p.valuations = p.bids;
  Outcome out = spa_tfm(p, {3, 2, 1.0});
  // Simulate a rebate flowing to the price-setting slot.
  out.rebates[2] = 1.5;
  out.payments[2] = -1.5;
  const std::vector<double> u = user_utilities(out, p);
  CHECK(u[0] == doctest::Approx(5.0));   // 10 - 5
  CHECK(u[1] == doctest::Approx(3.0));   // 8 - 5
  CHECK(u[2] == doctest::Approx(1.5));   // unconfirmed keeps its rebate
  CHECK(u[3] == 0.0);                    // excluded
}

TEST_CASE("utilities require valuations") {
  const BidProfile p = profile_of({10.0, 8.0, 5.0});
  const Outcome out = spa_tfm(p, {3, 2, 1.0});
  CHECK_THROWS_AS(user_utilities(out, p), std::invalid_argument);
}
