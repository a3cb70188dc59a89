// Reduced program construction, frozen optima, uniqueness probes, bid-wise
// replay, and the tail-only deviation.

#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfrm/rebate_lp.hpp"
#include "tfrm/sampling.hpp"
#include "tfrm/simplex.hpp"

using namespace tfrm;

namespace {

constexpr double kMargin = 1e-9;

RebateCoefficients solve_for(int n, int k) {
  return solve_lp(build_reduced_lp({n, k, 1.0}));
}

// Maximizes sign * x[var] over the reduced rows plus a floor on f; a pinched
// interval in both directions certifies the coordinate at the optimum.
double probe_at_optimum(const ReducedLP& lp, std::size_t var, double sign) {
  LpProblem problem;
  problem.objective.assign(lp.variables.size(), 0.0);
  problem.objective[var] = sign;
  problem.lhs = lp.lhs;
  problem.rhs = lp.rhs;
  const double f_star = static_cast<double>(lp.k) / lp.n;
  std::vector<double> floor_row(lp.variables.size(), 0.0);
  floor_row[0] = -1.0;
  problem.lhs.push_back(floor_row);
  problem.rhs.push_back(-(f_star - 1e-9));
  return sign * solve_simplex(problem).objective_value;
}

}  // namespace

// ---- program shape ----

TEST_CASE("reduced program rows and labels for n=5, k=3") {
  const ReducedLP lp = build_reduced_lp({5, 3, 1.0});
  CHECK(lp.variables == std::vector<std::string>{"f", "c3", "c4"});
  REQUIRE(lp.lhs.size() == 5);  // 2*(n-k) + 1
  CHECK(lp.row_labels ==
        std::vector<std::string>{"guarantee-prefix-3", "guarantee-prefix-4",
                                 "cap-first", "cap-total", "cap-prefix-1"});
  CHECK(lp.lhs[0] == std::vector<double>{1.0, -1.0, 0.0});
  CHECK(lp.lhs[1] == std::vector<double>{1.0, -1.0, -1.0});
  CHECK(lp.lhs[2] == std::vector<double>{0.0, 2.0, 0.0});
  CHECK(lp.lhs[3] == std::vector<double>{0.0, 5.0, 5.0});
  CHECK(lp.lhs[4] == std::vector<double>{0.0, 5.0, 1.0});
  CHECK(lp.rhs == std::vector<double>{0.0, 0.0, 3.0, 3.0, 3.0});
  CHECK(lp.objective == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("reduced program row count is 2(n-k)+1 and zero is feasible") {
  for (int n = 3; n <= 14; ++n) {
    for (int k = 1; k <= n - 2; ++k) {
      const ReducedLP lp = build_reduced_lp({n, k, 1.0});
      CHECK(lp.lhs.size() == static_cast<std::size_t>(2 * (n - k) + 1));
      CHECK(lp.variables.size() == static_cast<std::size_t>(n - k + 1));
      for (std::size_t r = 0; r < lp.lhs.size(); ++r) {
        CHECK(lp.rhs[r] >= 0.0);  // the zero vector satisfies every row
      }
    }
  }
}

TEST_CASE("reduced program rejects k above n-2") {
  CHECK_THROWS_AS(build_reduced_lp({5, 4, 1.0}), std::invalid_argument);
}

// ---- frozen optima ----

TEST_CASE("solved schedules match the closed form on pinned instances") {
  struct Case {
    int n;
    int k;
  };
  for (const Case c : {Case{5, 3}, Case{3, 1}, Case{4, 2}, Case{10, 7},
                       Case{50, 48}}) {
    CAPTURE(c.n);
    CAPTURE(c.k);
    const RebateCoefficients coeffs = solve_for(c.n, c.k);
    const double want = static_cast<double>(c.k) / c.n;
    CHECK(std::abs(coeffs.f - want) < kMargin);
    REQUIRE(coeffs.c.size() == static_cast<std::size_t>(c.n));
    for (int j = 0; j < c.n; ++j) {
      CHECK(std::abs(coeffs.c[j] - (j == c.k ? want : 0.0)) < kMargin);
    }
  }
}

TEST_CASE("solved schedules match the closed form for every n up to 12") {
  for (int n = 3; n <= 12; ++n) {
    for (int k = 1; k <= n - 2; ++k) {
      CAPTURE(n);
      CAPTURE(k);
      const RebateCoefficients coeffs = solve_for(n, k);
      const double want = static_cast<double>(k) / n;
      CHECK(std::abs(coeffs.f - want) < kMargin);
      for (int j = 0; j < n; ++j) {
        CHECK(std::abs(coeffs.c[j] - (j == k ? want : 0.0)) < kMargin);
      }
    }
  }
}

// ---- uniqueness at the optimum ----

TEST_CASE("coordinates are pinched at the optimal guarantee") {
  struct Case {
    int n;
    int k;
  };
  for (const Case c : {Case{5, 3}, Case{6, 2}, Case{7, 4}}) {
    CAPTURE(c.n);
    CAPTURE(c.k);
    const ReducedLP lp = build_reduced_lp({c.n, c.k, 1.0});
    for (std::size_t var = 1; var < lp.variables.size(); ++var) {
      const double want =
          (var == 1) ? static_cast<double>(c.k) / c.n : 0.0;
      CHECK(std::abs(probe_at_optimum(lp, var, 1.0) - want) < 1e-6);
      CHECK(std::abs(probe_at_optimum(lp, var, -1.0) - want) < 1e-6);
    }
  }
}

TEST_CASE("profile probes force every head coefficient to zero") {
  // Variables c_0..c_{k-1}; for each count j < k of unit bids, the last
  // slot's rebate must be nonnegative while the total rebate caps at zero.
  const int n = 5;
  const int k = 3;
  LpProblem base;
  for (int j = 0; j < k; ++j) {
    std::vector<double> ir(k, 0.0);
    for (int t = 0; t <= j; ++t) ir[t] = -1.0;
    base.lhs.push_back(std::move(ir));
    base.rhs.push_back(0.0);
    std::vector<double> cap(k, 0.0);
    cap[0] = static_cast<double>(n);
    for (int t = 1; t < j; ++t) cap[t] = static_cast<double>(n);
    if (j >= 1) cap[j] = static_cast<double>(n - j);
    base.lhs.push_back(std::move(cap));
    base.rhs.push_back(0.0);
  }
  for (int t = 0; t < k; ++t) {
    for (double sign : {1.0, -1.0}) {
      LpProblem probe = base;
      probe.objective.assign(k, 0.0);
      probe.objective[t] = sign;
      const LpSolution sol = solve_simplex(probe);
      CHECK(std::abs(sol.objective_value) < kMargin);
    }
  }
}

// ---- bid-wise replay ----

TEST_CASE("the optimal schedule passes the bid-wise requirements") {
  const MechanismParams params{5, 3, 1.0};
  const RebateCoefficients coeffs = solve_for(5, 3);
  Rng rng(99);
  std::vector<std::vector<double>> profiles{{1.0, 1.0, 1.0, 1.0, 1.0}};
  for (int t = 0; t < 500; ++t) {
    std::vector<double> bids;
    for (int i = 0; i < 5; ++i) bids.push_back(rng.uniform(0.0, 10.0));
    std::sort(bids.rbegin(), bids.rend());
    profiles.push_back(std::move(bids));
  }
  const BidwiseReport report =
      verify_bidwise_constraints(coeffs, params, profiles);
  CHECK(report.profiles_checked == profiles.size());
  CHECK(report.ok());
}

TEST_CASE("an inflated coefficient breaks the revenue cap on equal bids") {
  const MechanismParams params{5, 3, 1.0};
  RebateCoefficients coeffs = RebateCoefficients::optimal(params);
  coeffs.c[3] += 0.01;
  const BidwiseReport report = verify_bidwise_constraints(
      coeffs, params, {{1.0, 1.0, 1.0, 1.0, 1.0}});
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations[0].constraint == "rebate-sum-at-most-k-bk");
  CHECK(report.violations[0].lhs == doctest::Approx(3.05));
  CHECK(report.violations[0].rhs == doctest::Approx(3.0));
}

TEST_CASE("bid-wise replay rejects profiles of the wrong length") {
  const MechanismParams params{5, 3, 1.0};
  CHECK_THROWS_AS(verify_bidwise_constraints(
                      RebateCoefficients::optimal(params), params,
                      {{1.0, 1.0}}),
                  std::invalid_argument);
}

// ---- tail-only schedules ----

TEST_CASE("tail-only schedules redistribute nothing under the deviation") {
  const MechanismParams params{5, 2, 1.0};
  RebateCoefficients coeffs;
  coeffs.c.assign(5, 0.0);
  coeffs.c[3] = 0.5;  // 1/(n-k-1), the canonical tail-only normalization
  coeffs.f = 0.0;
  BidProfile p;
  p.bids = {10.0, 8.0, 6.0, 4.0, 2.0};
  const ManipulationReport report = tail_only_deviation(coeffs, p, params);
  CHECK(report.genuine_rebate_sum == 0.0);
  CHECK(report.miner_payments_received == doctest::Approx(16.0));  // k * b_k
  CHECK(report.miner_rebates_paid_to_genuine == 0.0);
  CHECK(report.miner_utility == doctest::Approx(16.0));
  CHECK(report.rri_defined);
  CHECK(report.realized_rri == 0.0);
  CHECK(report.displaced == std::vector<std::size_t>{2, 3, 4});
}

TEST_CASE("the deviation rejects schedules with head weight") {
  const MechanismParams params{5, 2, 1.0};
  BidProfile p;
  p.bids = {10.0, 8.0, 6.0, 4.0, 2.0};
  CHECK_THROWS_AS(
      tail_only_deviation(RebateCoefficients::optimal(params), p, params),
      std::invalid_argument);
}
