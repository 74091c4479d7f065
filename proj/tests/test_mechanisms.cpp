#include <doctest.h>

#include <cmath>
#include <vector>

#include "drmech/mechanisms.hpp"
#include "drmech/optimizer.hpp"
#include "drmech/rng.hpp"
#include "oracles.hpp"

using namespace drmech;

namespace {

Scenario two_slot_uniform(double e0, double e1) {
  Scenario s;
  s.n_slots = 2;
  s.baseline = {e0, e1};
  s.flat_rate = 110.0;
  s.cost.push_back(PiecewiseLinearCost({16300.0, 17900.0}, {10.0, 72.46, 91.0}));
  s.discomfort = DiscomfortModel::uniform(110.0, 0.0);
  return validate_scenario(std::move(s));
}

}  // namespace

TEST_CASE("default base fractions follow the distance-weighted split") {
  Matrix q3 = default_base_fractions(3);
  CHECK(q3(0, 1) == doctest::Approx(3.0 / 11.0).epsilon(1e-15));
  CHECK(q3(0, 2) == doctest::Approx(2.0 / 11.0).epsilon(1e-15));
  Matrix q2 = default_base_fractions(2);
  CHECK(q2(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (int n : {2, 3, 7}) {
    Matrix q = default_base_fractions(n);
    for (int j = 0; j < n; ++j) {
      CHECK(q(j, j) == 0.0);
      double row = 0.0;
      for (int i = 0; i < n; ++i) row += q(j, i);
      CHECK(row < 1.0 + 1e-12);
    }
  }
}

TEST_CASE("production cost on the reference curve") {
  PiecewiseLinearCost c({16300.0, 17900.0}, {10.0, 72.46, 91.0});
  CHECK(production_cost(c, {16000.0}) == doctest::Approx(160000.0));
  CHECK(production_cost(c, {17000.0}) == doctest::Approx(213722.0));
  CHECK(production_cost(c, {0.0}) == 0.0);
  CHECK_THROWS_AS(production_cost(c, {-5.0}), std::domain_error);
}

TEST_CASE("base evaluation: zero discounts and the worked two-slot case") {
  Scenario s = two_slot_uniform(10000.0, 10000.0);

  Evaluation at_zero = evaluate_base(s, {0.0, 0.0});
  CHECK(at_zero.shifts.entries(0, 0) == 10000.0);
  CHECK(at_zero.shifts.entries(1, 1) == 10000.0);
  CHECK(at_zero.breakdown.total == doctest::Approx(s.baseline_production_cost()));
  CHECK(at_zero.breakdown.savings_dollars == doctest::Approx(0.0));
  CHECK(at_zero.breakdown.discounts_paid == 0.0);

  Evaluation ev = evaluate_base(s, {0.0, 55.0});
  CHECK(ev.shifts.entries(0, 1) ==
        doctest::Approx((1.0 / 3.0) * 0.5 * 10000.0).epsilon(1e-12));
  CHECK(ev.breakdown.discounts_paid ==
        doctest::Approx(55.0 * 10000.0 / 6.0).epsilon(1e-12));
  CHECK(ev.breakdown.wasted_discounts == 0.0);
  CHECK(ev.breakdown.total ==
        doctest::Approx(ev.breakdown.production + ev.breakdown.discounts_paid));
}

TEST_CASE("optimized evaluation: base embedding and the full-fraction case") {
  Scenario s = two_slot_uniform(10000.0, 10000.0);

  // Embedding a base plan reproduces the base breakdown entry for entry.
  std::vector<double> r = {30.0, 55.0};
  OptimizedPlan embedded = embed_base_plan(s, BasePlan{r});
  Evaluation via_base = evaluate_base(s, r);
  Evaluation via_opt = evaluate_optimized(s, embedded.discounts, embedded.fractions);
  CHECK(via_opt.breakdown.total == doctest::Approx(via_base.breakdown.total).epsilon(1e-15));
  CHECK(via_opt.breakdown.discounts_paid ==
        doctest::Approx(via_base.breakdown.discounts_paid).epsilon(1e-15));

  Evaluation at_zero = evaluate_optimized(s, Matrix(2, 2, 40.0), Matrix(2, 2, 0.0));
  CHECK(at_zero.breakdown.total == doctest::Approx(s.baseline_production_cost()));

  Matrix rq(2, 2, 0.0), q(2, 2, 0.0);
  rq(0, 1) = 55.0;
  q(0, 1) = 1.0;
  Evaluation full = evaluate_optimized(s, rq, q);
  CHECK(full.shifts.entries(0, 1) == doctest::Approx(5000.0).epsilon(1e-12));

  Matrix bad_q(2, 2, 0.0);
  bad_q(1, 0) = 0.8;
  bad_q(1, 1) = 0.8;
  CHECK_THROWS_WITH_AS(evaluate_optimized(s, rq, bad_q), doctest::Contains("row 1"),
                       std::domain_error);
}

TEST_CASE("robust evaluation: waste accounting and the optimized dominance gap") {
  Scenario s = two_slot_uniform(10000.0, 10000.0);

  Evaluation at_zero = evaluate_robust(s, {20.0, 20.0}, {0.0, 0.0});
  CHECK(at_zero.breakdown.total == doctest::Approx(s.baseline_production_cost()));

  std::vector<double> r = {0.0, 55.0}, q = {0.0, 1.0};
  Evaluation rob = evaluate_robust(s, r, q);
  CHECK(rob.shifts.entries(0, 1) == doctest::Approx(5000.0).epsilon(1e-12));
  CHECK(rob.breakdown.wasted_discounts == doctest::Approx(550000.0).epsilon(1e-12));
  CHECK(rob.breakdown.discounts_paid == doctest::Approx(550000.0 + 55.0 * 5000.0));

  OptimizedPlan embedded = embed_robust_plan(s, RobustPlan{r, q});
  Evaluation opt = evaluate_optimized(s, embedded.discounts, embedded.fractions);
  CHECK(rob.breakdown.total - opt.breakdown.total ==
        doctest::Approx(550000.0).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(evaluate_robust(s, r, {0.6, 0.6}),
                       doctest::Contains("sum to more than 1"), std::domain_error);
}

TEST_CASE("robust waste is the analytic bilinear form and scales monotonically") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    Scenario s = testgen::random_scenario(500 + trial);
    OfferPlan plan = testgen::random_feasible_plan(s, Mechanism::Robust, trial);
    const auto& rp = std::get<RobustPlan>(plan);
    Evaluation ev = evaluate_robust(s, rp.discounts, rp.fractions);
    double expected = 0.0;
    for (int i = 0; i < s.n_slots; ++i)
      expected += rp.discounts[i] * rp.fractions[i] * s.baseline[i];
    CHECK(ev.breakdown.wasted_discounts ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(ev.breakdown.wasted_discounts <= ev.breakdown.discounts_paid + 1e-9);

    // Raising one fraction (keeping feasibility) cannot reduce the waste.
    std::vector<double> q2 = rp.fractions;
    int i = static_cast<int>(rng.below(s.n_slots));
    double slack = 1.0;
    for (double v : q2) slack -= v;
    q2[i] += 0.9 * std::max(slack, 0.0);
    Evaluation ev2 = evaluate_robust(s, rp.discounts, q2);
    CHECK(ev2.breakdown.wasted_discounts >= ev.breakdown.wasted_discounts - 1e-9);
  }
}

TEST_CASE("broadcast evaluation: zero, constant, and discontinuity witness") {
  Scenario s;
  s.n_slots = 3;
  s.baseline = {10000.0, 10000.0, 10000.0};
  s.flat_rate = 110.0;
  // Breakpoints below the post-shift load levels so that how the tied mass
  // splits matters for production, making the exact cost jump finite.
  s.cost.push_back(PiecewiseLinearCost({11000.0, 12500.0}, {10.0, 72.46, 91.0}));
  s.discomfort = DiscomfortModel::exponential(11.0, 110.0, 1.0);  // beta mean 10
  s = validate_scenario(std::move(s));

  Evaluation at_zero = evaluate_broadcast(s, {0.0, 0.0, 0.0});
  CHECK(at_zero.breakdown.total == doctest::Approx(s.baseline_production_cost()));
  CHECK(at_zero.breakdown.discounts_paid == 0.0);

  Evaluation constant = evaluate_broadcast(s, {25.0, 25.0, 25.0});
  CHECK(constant.breakdown.production == doctest::Approx(s.baseline_production_cost()));
  CHECK(constant.breakdown.discounts_paid ==
        doctest::Approx(25.0 * s.total_baseline_energy()).epsilon(1e-12));
  CHECK(constant.breakdown.wasted_discounts ==
        doctest::Approx(constant.breakdown.discounts_paid).epsilon(1e-12));

  // Exact mode: breaking the slot-0 / slot-2 tie reallocates half the moved
  // mass and the cost jumps by a finite amount; the smoothed cost barely moves.
  std::vector<double> tied = {10.0, 0.0, 10.0};
  std::vector<double> nudged = {10.0, 0.0, 10.0 - 1e-6};
  double jump = std::abs(evaluate_broadcast(s, tied, 0.0).breakdown.total -
                         evaluate_broadcast(s, nudged, 0.0).breakdown.total);
  CHECK(jump > 1000.0);
  double eps = 0.01 * s.flat_rate;
  double smooth_change = std::abs(evaluate_broadcast(s, tied, eps).breakdown.total -
                                  evaluate_broadcast(s, nudged, eps).breakdown.total);
  CHECK(smooth_change < 1.0);
}

TEST_CASE("zero plans of every mechanism reproduce the baseline exactly") {
  for (int trial = 0; trial < 10; ++trial) {
    Scenario s = testgen::random_scenario(900 + trial);
    const int n = s.n_slots;
    double baseline = s.baseline_production_cost();
    std::vector<Evaluation> evs = {
        evaluate_base(s, std::vector<double>(n, 0.0)),
        evaluate_optimized(s, Matrix(n, n, 0.0), Matrix(n, n, 0.3 / n)),
        evaluate_robust(s, std::vector<double>(n, 0.0), std::vector<double>(n, 1.0 / n)),
        evaluate_broadcast(s, std::vector<double>(n, 0.0)),
    };
    for (const Evaluation& ev : evs) {
      CHECK(ev.breakdown.discounts_paid == 0.0);
      CHECK(ev.breakdown.total == doctest::Approx(baseline).epsilon(1e-12));
      CHECK(ev.breakdown.savings_fraction == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("waste decomposition: total splits into production and discounts") {
  for (int trial = 0; trial < 25; ++trial) {
    Scenario s = testgen::random_scenario(1300 + trial);
    for (Mechanism mech : {Mechanism::Base, Mechanism::Optimized, Mechanism::Robust,
                           Mechanism::Broadcast}) {
      OfferPlan plan = testgen::random_feasible_plan(s, mech, 77 * trial + 3);
      CostBreakdown b = evaluate_plan(s, plan).breakdown;
      CHECK(b.total == doctest::Approx(b.production + b.discounts_paid).epsilon(1e-12));
      CHECK(b.wasted_discounts <= b.discounts_paid + 1e-9);
      if (mech == Mechanism::Base || mech == Mechanism::Optimized)
        CHECK(b.wasted_discounts == 0.0);
    }
  }
}

TEST_CASE("dictatorial bound: worked example, uniform baseline, dominance") {
  Scenario s = two_slot_uniform(18000.0, 16000.0);
  DictatorialResult dict = dictatorial_bound(s);
  CHECK(dict.allocation[0] == doctest::Approx(17000.0).epsilon(1e-12));
  CHECK(dict.allocation[1] == doctest::Approx(17000.0).epsilon(1e-12));
  CHECK(dict.production == doctest::Approx(427444.0).epsilon(1e-12));
  CHECK(s.baseline_production_cost() == doctest::Approx(448036.0).epsilon(1e-12));
  CHECK(dict.saving == doctest::Approx(20592.0).epsilon(1e-9));

  // Fine transfer search agrees.
  oracle::UniformToy toy{{18000.0, 16000.0}, 110.0, {16300.0, 17900.0},
                         {10.0, 72.46, 91.0}, 0.0};
  double oracle_prod = oracle::transfer_search_2slot(toy, 0.001);
  CHECK(dict.production == doctest::Approx(oracle_prod).epsilon(1e-6));

  Scenario flat = two_slot_uniform(12000.0, 12000.0);
  CHECK(dictatorial_bound(flat).saving == doctest::Approx(0.0));

  // No mechanism can save more than the dictatorial rearrangement.
  for (int trial = 0; trial < 20; ++trial) {
    Scenario rs = testgen::random_scenario(4400 + trial);
    double ceiling = dictatorial_bound(rs).saving;
    for (Mechanism mech : {Mechanism::Base, Mechanism::Optimized, Mechanism::Robust,
                           Mechanism::Broadcast}) {
      OfferPlan plan = testgen::random_feasible_plan(rs, mech, trial);
      CHECK(evaluate_plan(rs, plan).breakdown.savings_dollars <= ceiling + 1e-9);
    }
  }
}
