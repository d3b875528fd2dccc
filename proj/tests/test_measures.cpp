// Stationary-measure densities and normalizing constants, the marked
// double-tree walk kernel, and one-step stationarity tests.

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

BetaPool constant_pool(double value, double lambda, std::size_t n = 5000) {
  return init_pool(n, lambda, PoolInit::constant, value);
}

}  // namespace

TEST_CASE("kappa on the binary fixed point is x/(2x+1)", "[measures]") {
  const BetaPool pool = constant_pool(0.5, 1.0);
  for (double x : {0.25, 0.5, 1.0, 2.0}) {
    const EstimateWithCI e = kappa(x, 1.0, pool);
    REQUIRE(e.mean == Catch::Approx(x / (2.0 * x + 1.0)).epsilon(1e-13));
  }
  REQUIRE(kappa(1.0, 1.0, pool).mean == Catch::Approx(1.0 / 3.0).epsilon(1e-13));
  REQUIRE(kappa(0.0, 1.0, pool).mean == 0.0);
  REQUIRE_THROWS_AS(kappa(-1.0, 1.0, pool), DomainError);
}

TEST_CASE("kappa is monotone with shared randomness", "[measures]") {
  const BetaPool pool = make_pool(dist_12(), 1.0, 50'000, 100, RngStream(60, 1));
  const EstimateWithCI lo = kappa(0.5, 1.0, pool);
  const EstimateWithCI hi = kappa(1.0, 1.0, pool);
  REQUIRE(hi.mean - lo.mean > 3.0 * (hi.std_error + lo.std_error));
  // Bounded by E[beta] < 1.
  double mean_beta = 0.0;
  for (double b : pool.values) mean_beta += b;
  mean_beta /= static_cast<double>(pool.size());
  REQUIRE(hi.mean < mean_beta);
  REQUIRE(mean_beta < 1.0);
}

TEST_CASE("normalizing constants on b-ary fixed points are exact", "[measures]") {
  SECTION("b = 2, lambda = 1: h = 1/3, c = 1") {
    const BetaPool pool = constant_pool(0.5, 1.0);
    const EstimateWithCI h = estimate_h(dist_bary(2), 1.0, pool, 4000, RngStream(61, 1));
    const EstimateWithCI c = estimate_c(dist_bary(2), 1.0, pool, 4000, RngStream(61, 2));
    REQUIRE(h.mean == Catch::Approx(1.0 / 3.0).epsilon(1e-13));
    REQUIRE(c.mean == Catch::Approx(1.0).epsilon(1e-13));
  }
  SECTION("b = 3, lambda = 1: h = 1/2, c = 1") {
    const BetaPool pool = constant_pool(2.0 / 3.0, 1.0);
    const EstimateWithCI h = estimate_h(dist_bary(3), 1.0, pool, 4000, RngStream(62, 1));
    const EstimateWithCI c = estimate_c(dist_bary(3), 1.0, pool, 4000, RngStream(62, 2));
    REQUIRE(h.mean == Catch::Approx(0.5).epsilon(1e-13));
    REQUIRE(c.mean == Catch::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("h and c respect their bounds on the mixed law", "[measures]") {
  const auto d = dist_12();
  const BetaPool pool = make_pool(d, 0.5, 50'000, 100, RngStream(63, 1));
  const EstimateWithCI h = estimate_h(d, 0.5, pool, 50'000, RngStream(63, 2));
  const EstimateWithCI c = estimate_c(d, 0.5, pool, 50'000, RngStream(63, 3));
  REQUIRE(h.mean > 0.0);
  REQUIRE(h.mean < 1.0);
  REQUIRE(c.mean + 3.0 * c.std_error < 0.5 + 1.5);  // c < lambda + m

  // Stability under doubling the draw count (within 3 combined SE).
  const EstimateWithCI h2 = estimate_h(d, 0.5, pool, 100'000, RngStream(64, 2));
  REQUIRE(std::fabs(h.mean - h2.mean) <
          3.0 * std::sqrt(h.std_error * h.std_error + h2.std_error * h2.std_error) +
              1e-4);
}

TEST_CASE("weight formulas and bounds", "[measures]") {
  REQUIRE(harm_weight(0.5, 1.0, 1.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(agw_weight(0.5, 1.0, 2, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
  REQUIRE(harm_weight(0.5, 0.0, 1.0) == 0.0);
  REQUIRE_THROWS_AS(harm_weight(0.1, 0.0, 0.5), DomainError);
  REQUIRE_THROWS_AS(agw_weight(0.1, 0.0, 1, 0.5), DomainError);

  RngStream rng(65, 0);
  for (int i = 0; i < 10'000; ++i) {
    const double lambda = 0.1 + 1.3 * rng.uniform();
    const double lo = std::max(0.0, 1.0 - lambda) + 1e-6;
    const double beta = lo + (1.0 - 1e-6 - lo) * rng.uniform();
    const int nu = 1 + static_cast<int>(rng.uniform_below(3));
    double c_plus = 0.0;
    for (int j = 0; j < nu; ++j)
      c_plus += lo + (1.0 - 1e-6 - lo) * rng.uniform();
    REQUIRE(harm_weight(beta, c_plus, lambda) <= beta + 1e-12);
    REQUIRE(agw_weight(beta, c_plus, nu, lambda) <= lambda + nu + 1e-12);
  }
}

TEST_CASE("harm_step follows the flow probabilities", "[measures]") {
  Tree t(dist_bary(3), RngStream(66, 0));
  RngStream rng(66, 1);
  std::vector<std::size_t> counts(3, 0);
  for (int i = 0; i < 30'000; ++i) {
    const int c = harm_step(t, 1.0, 1e-6, rng);
    ++counts[c - t.child(Tree::kRoot, 0)];
  }
  const Chi2Result res =
      chi2_goodness_of_fit(counts, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  REQUIRE(res.p_value > 0.01);
}

TEST_CASE("marked-walk transition law on the binary tree", "[measures]") {
  const auto d = dist_bary(2);
  MarkedDoubleTree mdt = make_marked_double_tree(d, 1.0, 40, 1e-6, RngStream(67, 0));
  RngStream rng(67, 1);
  RngStream er(67, 2);
  std::vector<std::size_t> counts(3, 0);  // child 0 down, child 1 down, ray shift
  for (int s = 0; s < 3000; ++s) {
    if (mdt.ray.size() < 2) extend_ray(mdt, 1.0, 20, 1e-6, er.substream(s));
    const MarkedStepReport rep = rw_marked_step(mdt, 1.0, rng);
    if (rep.ray_shifted) ++counts[2];
    else ++counts[rep.upper_child];
  }
  const Chi2Result res =
      chi2_goodness_of_fit(counts, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  INFO("chi2 " << res.statistic << " p " << res.p_value);
  REQUIRE(res.p_value > 0.01);
}

TEST_CASE("ray shift frequency is lambda/(nu+ + lambda) for small lambda",
          "[measures]") {
  const auto d = dist_bary(2);
  const double lambda = 0.01;
  MarkedDoubleTree mdt = make_marked_double_tree(d, lambda, 30, 1e-6, RngStream(68, 0));
  RngStream rng(68, 1);
  RngStream er(68, 2);
  const int n = 3000;
  int shifts = 0;
  for (int s = 0; s < n; ++s) {
    if (mdt.ray.size() < 2) extend_ray(mdt, lambda, 20, 1e-6, er.substream(s));
    if (rw_marked_step(mdt, lambda, rng).ray_shifted) ++shifts;
  }
  const double p = lambda / (2.0 + lambda);
  const double se = std::sqrt(p * (1.0 - p) / n);
  REQUIRE(std::fabs(static_cast<double>(shifts) / n - p) < 3.0 * se);
}

TEST_CASE("marked-step degree bookkeeping", "[measures]") {
  const auto d = dist_12();
  MarkedDoubleTree mdt = make_marked_double_tree(d, 1.0, 50, 1e-3, RngStream(69, 0));
  RngStream rng(69, 1);
  RngStream er(69, 2);
  for (int s = 0; s < 2000; ++s) {
    if (mdt.ray.size() < 2) extend_ray(mdt, 1.0, 25, 1e-3, er.substream(s));
    const int nu_lower = mdt.lower.ensure_children(mdt.ray[0]);
    const int nu_upper = mdt.upper.ensure_children(Tree::kRoot);
    const MarkedStepReport rep = rw_marked_step(mdt, 1.0, rng);
    // The tree that absorbed the old root keeps its child count.
    if (rep.ray_shifted) {
      REQUIRE(rep.new_upper_root_nu == nu_lower);
    } else {
      REQUIRE(mdt.lower.nu(Tree::kRoot) == nu_upper);
    }
    // Outputs remain valid marked double trees.
    REQUIRE(mdt.ray.front() == Tree::kRoot);
    for (std::size_t i = 0; i + 1 < mdt.ray.size(); ++i)
      REQUIRE(mdt.lower.parent(mdt.ray[i + 1]) == mdt.ray[i]);
  }
}

TEST_CASE("one-step stationarity is exact on b-ary laws", "[measures]") {
  const BetaPool pool = constant_pool(0.5, 1.0);
  for (StationarityKind kind : {StationarityKind::harm, StationarityKind::agw}) {
    const StationarityReport rep =
        stationarity_test(kind, dist_bary(2), 1.0, pool, 2000, RngStream(70, 1));
    for (const auto& e : rep.entries) {
      REQUIRE(e.mean_before == Catch::Approx(e.mean_after).margin(1e-12));
      REQUIRE(e.z == 0.0);
    }
  }
}

TEST_CASE("one-step stationarity holds and the negative control fails",
          "[measures]") {
  const auto d = dist_12();
  const BetaPool pool = make_pool(d, 1.0, 50'000, 100, RngStream(71, 1));
  for (StationarityKind kind : {StationarityKind::harm, StationarityKind::agw}) {
    const StationarityReport rep =
        stationarity_test(kind, d, 1.0, pool, 30'000, RngStream(71, 2));
    REQUIRE(rep.entries.size() == 4);
    for (const auto& e : rep.entries) {
      INFO("functional " << e.functional << " z " << e.z);
      REQUIRE(std::fabs(e.z) < 3.0);
    }
    const StationarityReport neg = stationarity_test(
        kind, d, 1.0, pool, 30'000, RngStream(71, 2), /*negative_control=*/true);
    double max_abs_z = 0.0;
    for (const auto& e : neg.entries) max_abs_z = std::max(max_abs_z, std::fabs(e.z));
    REQUIRE(max_abs_z > 3.0);
  }
}
