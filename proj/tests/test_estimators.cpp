// Closed-form and ergodic estimators: exact constants, the dimension and
// children averages, A/B sequences, sweeps, and the theorem check suite.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gwharm/gwharm.hpp"

using namespace gwharm;

namespace {

OffspringDistribution dist_12() {
  return OffspringDistribution::validate({{1, 0.5}, {2, 0.5}});
}

OffspringDistribution dist_bary(int b) {
  return OffspringDistribution::validate({{b, 1.0}}, true);
}

Budget small_budget() {
  Budget b;
  b.pool_size = 20'000;
  b.sweeps = 100;
  return b;
}

}  // namespace

TEST_CASE("exact constants", "[estimators]") {
  SECTION("mixed law {1: 1/2, 2: 1/2}") {
    const ExactConstants c = exact_constants(dist_12());
    REQUIRE(c.m == Catch::Approx(1.5).epsilon(1e-14));
    REQUIRE(c.log_m == Catch::Approx(std::log(1.5)).epsilon(1e-14));
    REQUIRE(c.gw_log_nu == Catch::Approx(0.34657359027997264).epsilon(1e-12));
    REQUIRE(c.uniform_children == Catch::Approx(5.0 / 3.0).epsilon(1e-14));
    REQUIRE(c.walk_children_limit == Catch::Approx(4.75 / 3.0).epsilon(1e-14));
  }
  SECTION("binary law") {
    const ExactConstants c = exact_constants(dist_bary(2));
    REQUIRE(c.gw_log_nu == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    REQUIRE(c.log_m == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    REQUIRE(c.uniform_children == Catch::Approx(2.0).epsilon(1e-14));
    REQUIRE(c.walk_children_limit == Catch::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("closed-form suite is exact on the binary tree", "[estimators]") {
  Budget b;
  b.pool_size = 2000;
  b.sweeps = 200;
  const ClosedFormEstimates e = closed_form_suite(dist_bary(2), 1.0, b, RngStream(80, 0));
  REQUIRE(e.h.mean == Catch::Approx(1.0 / 3.0).margin(1e-9));
  REQUIRE(e.c.mean == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(e.dim.mean == Catch::Approx(std::log(2.0)).margin(1e-9));
  REQUIRE(e.harm_children.mean == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(e.walk_children.mean == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(e.rec_harm.mean == Catch::Approx(0.5).margin(1e-9));
  REQUIRE(e.rec_walk.mean == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("dimension estimate sits in the theorem bracket", "[estimators]") {
  const EstimateWithCI d = dim_harmonic(dist_12(), 1.0, Method::closed_form_pool,
                                        small_budget(), RngStream(81, 0));
  REQUIRE(d.mean - 3.0 * d.std_error > 0.346574);
  REQUIRE(d.mean + 3.0 * d.std_error < 0.405465);
  REQUIRE_THROWS_AS(
      dim_harmonic(dist_12(), 1.5, Method::closed_form_pool, small_budget(),
                   RngStream(81, 1)),
      DomainError);
  REQUIRE_THROWS_AS(
      dim_harmonic(dist_12(), 1.0, Method::ergodic_walk, small_budget(),
                   RngStream(81, 2)),
      ConfigError);
}

TEST_CASE("ray ergodic records on the binary tree are deterministic",
          "[estimators]") {
  Budget b;
  b.ray_steps = 300;
  b.ray_burnin = 20;
  const RayErgodicRecords rec = ray_ergodic_run(dist_bary(2), 1.0, b, RngStream(82, 0));
  REQUIRE(rec.nu.size() == 300);
  for (double v : rec.nu) REQUIRE(v == 2.0);
  for (double v : rec.log_c_lambda)
    REQUIRE(v == Catch::Approx(std::log(2.0)).margin(1e-6));
  REQUIRE(rec.mean_bias >= 0.0);
}

TEST_CASE("budget margin doubles above lambda = 1", "[estimators]") {
  Budget b;
  REQUIRE(b.margin_for(0.5) == 30);
  REQUIRE(b.margin_for(1.25) == 60);
  REQUIRE(b.draws() == b.pool_size);
  b.n_draws = 77;
  REQUIRE(b.draws() == 77);
}

TEST_CASE("A and B sequences on deterministic beta values", "[estimators]") {
  const auto d2 = dist_bary(2);
  SECTION("b = 2, lambda = 1: A(1) = 1/4, A(2) = 1/3, B constant 1") {
    const BetaPool pool = init_pool(2000, 1.0, PoolInit::constant, 0.5);
    const auto rows = sequences_AB(d2, 1.0, 5, pool, 2000, RngStream(83, 0));
    REQUIRE(rows[0].a.mean == Catch::Approx(0.25).epsilon(1e-14));
    REQUIRE(rows[1].a.mean == Catch::Approx(1.0 / 3.0).epsilon(1e-13));
    for (const auto& row : rows) REQUIRE(row.b.mean == 1.0);
  }
  SECTION("b = 2, lambda = 1/2: B(1) = 1.125, B(2) = 1.875/1.75, decreasing") {
    const BetaPool pool = init_pool(2000, 0.5, PoolInit::constant, 0.75);
    const auto rows = sequences_AB(d2, 0.5, 3, pool, 2000, RngStream(83, 1));
    REQUIRE(rows[0].b.mean == Catch::Approx(1.125).epsilon(1e-13));
    REQUIRE(rows[1].b.mean == Catch::Approx(1.875 / 1.75).epsilon(1e-13));
    REQUIRE(rows[0].b_step.mean < 0.0);
  }
  SECTION("b = 3, lambda = 2: B(1) = 0.6, B(2) = 2/3, increasing") {
    const BetaPool pool = init_pool(2000, 2.0, PoolInit::constant, 1.0 / 3.0);
    const auto rows = sequences_AB(dist_bary(3), 2.0, 3, pool, 2000, RngStream(83, 2));
    REQUIRE(rows[0].b.mean == Catch::Approx(0.6).epsilon(1e-13));
    REQUIRE(rows[1].b.mean == Catch::Approx(2.0 / 3.0).epsilon(1e-13));
    REQUIRE(rows[0].b_step.mean > 0.0);
  }
  SECTION("k_max below 2 is rejected") {
    const BetaPool pool = init_pool(2000, 1.0, PoolInit::constant, 0.5);
    REQUIRE_THROWS_AS(sequences_AB(d2, 1.0, 1, pool, 2000, RngStream(83, 3)),
                      ConfigError);
  }
}

TEST_CASE("A/B sequence monotonicity on the mixed law", "[estimators]") {
  const auto d = dist_12();
  const BetaPool pool = make_pool(d, 0.5, 30'000, 100, RngStream(84, 0));
  const auto rows = sequences_AB(d, 0.5, 6, pool, 30'000, RngStream(84, 1));
  for (const auto& row : rows) {
    if (row.k >= 6) break;
    REQUIRE(row.a_step.mean > 3.0 * row.a_step.std_error);
    REQUIRE(row.a_over_k_step.mean < -3.0 * row.a_over_k_step.std_error);
    REQUIRE(row.b_step.mean < -3.0 * row.b_step.std_error);  // lambda < 1
  }
}

TEST_CASE("sweep produces one point per grid value with constants", "[estimators]") {
  Budget b;
  b.pool_size = 5000;
  b.sweeps = 60;
  const SweepResult sw =
      sweep_lambda(dist_12(), {0.5, 1.0}, b, RngStream(85, 0));
  REQUIRE(sw.points.size() == 2);
  REQUIRE(sw.lambda_grid == std::vector<double>{0.5, 1.0});
  for (const auto& pt : sw.points) {
    REQUIRE(pt.quantities.size() == 7);
    REQUIRE(pt.quantities.count("dim") == 1);
    REQUIRE(pt.quantities.count("walk_children") == 1);
  }
  REQUIRE(sw.constants.m == Catch::Approx(1.5));
  REQUIRE_THROWS_AS(sweep_lambda(dist_12(), {1.6}, b, RngStream(85, 1)), ConfigError);
}

TEST_CASE("paired dip of the walk children average", "[estimators]") {
  Budget b;
  b.pool_size = 30'000;
  b.sweeps = 100;
  const EstimateWithCI dip =
      walk_children_paired_diff(dist_12(), 0.05, 0.5, b, RngStream(86, 0));
  REQUIRE(dip.mean > 3.0 * dip.std_error);
}

TEST_CASE("theorem suite on the b-ary law reports degeneracy", "[estimators]") {
  const CheckReport rep =
      theorem_suite(dist_bary(2), small_budget(), RngStream(87, 0));
  REQUIRE_FALSE(rep.entries.empty());
  for (const auto& e : rep.entries) REQUIRE(e.verdict == Verdict::degenerate);
  REQUIRE_FALSE(rep.any_fail);
  REQUIRE_FALSE(rep.any_inconclusive);
}

TEST_CASE("theorem suite never fails on the mixed law", "[estimators]") {
  const CheckReport rep = theorem_suite(dist_12(), small_budget(), RngStream(88, 0));
  for (const auto& e : rep.entries) {
    INFO(e.claim_id << " (" << e.direction << ") z = " << e.z << " -> "
                    << verdict_name(e.verdict));
    REQUIRE(e.verdict != Verdict::fail);
  }
  REQUIRE_FALSE(rep.any_fail);
  // The lambda > 1 ordering claim is reported as conjecture evidence.
  bool saw_conjecture = false;
  for (const auto& e : rep.entries)
    if (e.claim_id == "conjecture_iii") saw_conjecture = true;
  REQUIRE(saw_conjecture);
}

TEST_CASE("theorem suite completes on a heavier-tailed law", "[estimators]") {
  const auto d = OffspringDistribution::validate({{1, 0.9}, {10, 0.1}});
  REQUIRE(d.mean() == Catch::Approx(1.9).epsilon(1e-14));
  // Size-biased mean oracle recomputed directly: (1*0.9 + 100*0.1)/1.9.
  REQUIRE(exact_constants(d).uniform_children ==
          Catch::Approx(10.9 / 1.9).epsilon(1e-14));
  Budget b;
  b.pool_size = 10'000;
  b.sweeps = 80;
  const CheckReport rep = theorem_suite(d, b, RngStream(89, 0));
  REQUIRE_FALSE(rep.entries.empty());
  for (const auto& e : rep.entries) {
    INFO(e.claim_id << " z = " << e.z << " -> " << verdict_name(e.verdict));
    // The bracket claims of Theorem 1.2(i) are the oracle here.
    if (e.claim_id.rfind("thm1.2i_", 0) == 0) REQUIRE(e.verdict != Verdict::fail);
  }
}
