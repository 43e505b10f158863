#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nettariff/oracle.hpp"
#include "nettariff/verify.hpp"

using namespace nettariff;

namespace {
const ProviderConfig kReferenceProvider{{0.4, 0.1, 0.6}, 0.5};
const MarketScenario kReferenceScenario{{kReferenceProvider}, 1.5, {1.0, 1.0}};
}  // namespace

TEST_CASE("grid weights are exact cell measures") {
  // uniform measure: four equal cells
  const auto g = build_grid({1.0, 1.0}, 2, 2);
  for (double w : g.u_weight) CHECK(w == Catch::Approx(0.5).margin(1e-15));
  for (double w : g.v_weight) CHECK(w == Catch::Approx(0.5).margin(1e-15));
  CHECK(g.total_weight() == Catch::Approx(1.0).margin(1e-15));

  // alpha = 2 tilts demand mass upward: column weights (0.25, 0.75)
  const auto g2 = build_grid({2.0, 1.0}, 2, 2);
  CHECK(g2.u_weight[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK(g2.u_weight[1] == Catch::Approx(0.75).margin(1e-15));

  Rng rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    const auto grid = build_grid(verify_detail::draw_distribution(rng),
                                 rng.uniform_int(1, 50), rng.uniform_int(1, 50));
    CHECK(grid.total_weight() == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK_THROWS_AS(build_grid({1.0, 1.0}, 0, 2), std::domain_error);
}

TEST_CASE("agent sums approach the quadrature metrics") {
  const double q[1] = {0.3387};
  const auto exact = market_metrics(kReferenceScenario, q);
  const auto grid = build_grid({1.0, 1.0}, 500, 500);
  const auto approx = oracle_metrics(grid, kReferenceScenario, q);
  CHECK(approx.load[0] == Catch::Approx(exact.load[0]).epsilon(1e-2));
  CHECK(approx.revenue[0] == Catch::Approx(exact.revenue[0]).epsilon(1e-2));
  CHECK(approx.welfare[0] == Catch::Approx(exact.welfare[0]).epsilon(1e-2));
  CHECK(approx.share[0] == Catch::Approx(exact.share[0]).epsilon(1e-2));
}

TEST_CASE("grid refinement shrinks the metric error") {
  const double q[1] = {0.3387};
  const auto exact = market_metrics(kReferenceScenario, q);
  double prev_err = 1e9;
  for (int n : {125, 250, 500}) {
    const auto m = oracle_metrics(build_grid({1.0, 1.0}, n, n), kReferenceScenario, q);
    const double err = std::abs(m.load[0] - exact.load[0]);
    CHECK(err < prev_err + 1e-12);
    prev_err = err;
  }
}

TEST_CASE("oracle equilibrium approaches the analytic fixed point") {
  const auto exact = solve_monopoly(kReferenceProvider, 1.5, {1.0, 1.0});
  const auto eq = oracle_equilibrium(build_grid({1.0, 1.0}, 500, 500),
                                     kReferenceProvider, 1.5);
  REQUIRE(eq.converged);
  CHECK(std::abs(eq.q[0] - exact.q[0]) <= 2e-3);
}

TEST_CASE("prohibitive lump sum gives the zero equilibrium on the grid") {
  const auto eq = oracle_equilibrium(build_grid({1.0, 1.0}, 50, 50),
                                     {{0.4, 1.2, 0.6}, 0.5}, 1.5);
  REQUIRE(eq.converged);
  CHECK(eq.q[0] == 0.0);
}

TEST_CASE("the scale transform commutes with the grid equilibrium") {
  const ScaleTransform tr{3.0, 1.0, 1.0};  // the k = 3 normalization case
  const auto grid = build_grid({1.0, 1.0}, 64, 64);
  const auto scaled = denormalize_grid(grid, tr);
  const auto base = oracle_equilibrium(grid, kReferenceProvider, 1.5);
  const auto other = oracle_equilibrium(
      scaled,
      {denormalize_tariff(kReferenceProvider.tariff, tr),
       denormalize_capacity(kReferenceProvider.capacity, tr)},
      1.5);
  CHECK(std::abs(base.q[0] - other.q[0]) <= 1e-9);
  CHECK(std::abs(base.d[0] - other.d[0] * tr.k / tr.U) <= 1e-9);
}

TEST_CASE("transform helpers invert each other") {
  Rng rng(302);
  for (int trial = 0; trial < 20; ++trial) {
    const ScaleTransform tr{rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0),
                            rng.uniform(0.5, 3.0)};
    const Tariff t = verify_detail::draw_tariff(rng);
    const Tariff rt = normalize_tariff(denormalize_tariff(t, tr), tr);
    if (is_unlimited(t.cap)) {
      CHECK(is_unlimited(rt.cap));
    } else {
      CHECK(rt.cap == Catch::Approx(t.cap).margin(1e-12));
    }
    CHECK(rt.lump_sum == Catch::Approx(t.lump_sum).margin(1e-12));
    CHECK(rt.per_unit == Catch::Approx(t.per_unit).margin(1e-12));
    const double c = rng.uniform(0.1, 2.0);
    CHECK(normalize_capacity(denormalize_capacity(c, tr), tr) ==
          Catch::Approx(c).margin(1e-12));
  }
}
