#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nettariff/demand_based.hpp"
#include "nettariff/optimize.hpp"
#include "nettariff/verify.hpp"

using namespace nettariff;

namespace {

const UserDistribution kUniform{1.0, 1.0};
const Tariff kReferenceTariff{0.4, 0.1, 0.6};

// Independent check for the per-u densities: brute-force midpoint sum
// over the value axis instead of the closed-form cell integration.
struct BruteDensities {
  double load = 0.0, revenue = 0.0;
};

BruteDensities brute_force_densities(double u, const Tariff& t, double q_i,
                                     double q0, const UserDistribution& dist,
                                     int n = 400000) {
  BruteDensities out;
  const double rho = achievable_demand(u, q_i);
  const double rho0 = achievable_demand(u, q0);
  double prev_cdf = 0.0;
  for (int j = 0; j < n; ++j) {
    const double v = (j + 0.5) / n;
    const double cdf = dist.cdf_v(double(j + 1) / n);
    const double w = cdf - prev_cdf;
    prev_cdf = cdf;
    const double util = utility_given_rho(rho, v, t);
    if (util < v * rho0) continue;
    const double y = usage_given_rho(rho, v, t);
    out.load += w * y;
    out.revenue += w * charge(y, t);
  }
  return out;
}

}  // namespace

TEST_CASE("below-cap construction respreads the lump sum exactly") {
  const Tariff t{0.9, 0.1, 0.3};
  const double u = 0.4, q_i = 0.2, q0 = 1.0;
  const double rho = achievable_demand(u, q_i);
  REQUIRE(rho <= t.cap);
  const auto pp = payg_equivalent_price(u, t, q_i, q0, kUniform);
  CHECK(pp.tag == PaygCase::charge_preserving);
  CHECK(pp.price == Catch::Approx(0.1 / rho).margin(1e-15));
  // every participating user is charged identically
  const auto report = payg_equivalence_report(u, t, q_i, q0, kUniform);
  CHECK(report.revenue_payg == Catch::Approx(report.revenue_original).margin(1e-15));
  CHECK(report.load_payg == Catch::Approx(report.load_original).margin(1e-15));
}

TEST_CASE("zero-cap construction adds the respread lump sum to the fee") {
  const Tariff t{0.0, 0.08, 0.5};
  const double u = 0.7, q_i = 0.4, q0 = 2.0;
  const double rho = achievable_demand(u, q_i);
  const auto pp = payg_equivalent_price(u, t, q_i, q0, kUniform);
  CHECK(pp.price == Catch::Approx(0.08 / rho + 0.5).margin(1e-12));
}

TEST_CASE("an existing pay-as-you-go tariff is a fixed point of the construction") {
  const Tariff t = Tariff::pay_as_you_go(0.45);
  const double u = 0.6, q_i = 0.3, q0 = 1.2;
  const auto pp = payg_equivalent_price(u, t, q_i, q0, kUniform);
  CHECK(pp.price == Catch::Approx(0.45).margin(1e-12));
  const auto report = payg_equivalence_report(u, t, q_i, q0, kUniform);
  CHECK(report.revenue_payg == Catch::Approx(report.revenue_original).margin(1e-12));
  CHECK(report.load_payg == Catch::Approx(report.load_original).margin(1e-12));
}

TEST_CASE("revenue-matched case balances revenue and sheds load") {
  // rho > g, f below the fee threshold, q_i < q0: the revenue-matching
  // equation decides the price.
  const double u = 0.9, q_i = 0.25, q0 = 1.8;
  const double rho0 = achievable_demand(u, q0);
  const Tariff t{0.35, 0.02, 0.8};
  REQUIRE(achievable_demand(u, q_i) > t.cap);
  REQUIRE(t.cap * t.per_unit - t.lump_sum > rho0 * t.per_unit);

  const auto report = payg_equivalence_report(u, t, q_i, q0, kUniform);
  CHECK(report.tag == PaygCase::revenue_matched);
  CHECK(std::abs(report.revenue_payg - report.revenue_original) <= 1e-8);
  CHECK(report.load_payg <= report.load_original + 1e-12);

  // cross-check both sides against the brute-force v-grid
  const auto brute_orig = brute_force_densities(u, t, q_i, q0, kUniform);
  const auto brute_payg = brute_force_densities(
      u, Tariff::pay_as_you_go(report.payg_price), q_i, q0, kUniform);
  CHECK(report.revenue_original == Catch::Approx(brute_orig.revenue).margin(1e-4));
  CHECK(report.revenue_payg == Catch::Approx(brute_payg.revenue).margin(1e-4));
  CHECK(report.load_original == Catch::Approx(brute_orig.load).margin(1e-4));
  CHECK(report.load_payg == Catch::Approx(brute_payg.load).margin(1e-4));
}

TEST_CASE("randomized equivalence instances hold both case contracts") {
  VerifyOptions opts;
  opts.seed = 11;
  opts.equivalence_cases = 60;
  const auto result = check_payg_equivalence(opts);
  INFO(result.detail);
  CHECK(result.passed);
}

TEST_CASE("achievable demand of zero is rejected") {
  CHECK_THROWS_AS(payg_equivalent_price(0.0, kReferenceTariff, 0.5, 1.0, kUniform),
                  std::domain_error);
}

TEST_CASE("single-band equilibrium equals the monopoly solver") {
  const auto banded = DemandBasedTariff::uniform(kReferenceTariff, 1);
  const auto a = solve_demand_based_equilibrium(banded, 0.5, 1.5, kUniform);
  const auto b = solve_monopoly({kReferenceTariff, 0.5}, 1.5, kUniform);
  REQUIRE(a.converged);
  CHECK(a.q[0] == Catch::Approx(b.q[0]).margin(1e-10));
}

TEST_CASE("band splitting does not change the equilibrium") {
  const auto one = DemandBasedTariff::uniform(kReferenceTariff, 1);
  const auto two = DemandBasedTariff::uniform(kReferenceTariff, 2);
  const auto four = DemandBasedTariff::uniform(kReferenceTariff, 4);
  const auto eq1 = solve_demand_based_equilibrium(one, 0.5, 1.5, kUniform);
  const auto eq2 = solve_demand_based_equilibrium(two, 0.5, 1.5, kUniform);
  const auto eq4 = solve_demand_based_equilibrium(four, 0.5, 1.5, kUniform);
  CHECK(eq1.q[0] == Catch::Approx(eq2.q[0]).margin(1e-9));
  CHECK(eq1.q[0] == Catch::Approx(eq4.q[0]).margin(1e-9));
  CHECK(eq4.q[0] == Catch::Approx(0.3387).margin(1e-3));
}

TEST_CASE("band-merge invariance holds for mixed tariffs") {
  Rng rng(401);
  for (int trial = 0; trial < 10; ++trial) {
    DemandBasedTariff tariff;
    tariff.bands.push_back({0.0, 0.5, verify_detail::draw_tariff(rng)});
    tariff.bands.push_back({0.5, 1.0, verify_detail::draw_tariff(rng)});
    DemandBasedTariff split;
    split.bands.push_back({0.0, 0.25, tariff.bands[0].tariff});
    split.bands.push_back({0.25, 0.5, tariff.bands[0].tariff});
    split.bands.push_back({0.5, 0.8, tariff.bands[1].tariff});
    split.bands.push_back({0.8, 1.0, tariff.bands[1].tariff});

    const double c = rng.uniform(0.2, 1.5);
    const double q0 = verify_detail::draw_q0(rng);
    const auto a = solve_demand_based_equilibrium(tariff, c, q0, kUniform);
    const auto b = solve_demand_based_equilibrium(split, c, q0, kUniform);
    CHECK(std::abs(a.q[0] - b.q[0]) <= 1e-9);
  }
}

TEST_CASE("banded tariffs validate their partition") {
  DemandBasedTariff bad;
  bad.bands.push_back({0.0, 0.6, kReferenceTariff});
  bad.bands.push_back({0.7, 1.0, kReferenceTariff});  // gap
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  DemandBasedTariff empty;
  CHECK_THROWS_AS(empty.validate(), std::domain_error);
}

TEST_CASE("flat-rate tariffs are dominated by their pay-as-you-go respread") {
  const auto flat = DemandBasedTariff::uniform(Tariff::flat_rate(0.15), 1);
  const auto report = verify_payg_dominance(flat, 0.8, 1.2, kUniform);
  REQUIRE(report.original.converged);
  REQUIRE(report.payg.converged);
  CHECK(report.payg.q[0] <= report.original.q[0] + 1e-8);
  CHECK(report.revenue_payg >= report.revenue_original - 1e-6);
}

TEST_CASE("a pay-as-you-go tariff is unchanged by the dominance construction") {
  const auto payg = DemandBasedTariff::uniform(Tariff::pay_as_you_go(0.4), 1);
  const auto report = verify_payg_dominance(payg, 0.8, 1.2, kUniform);
  CHECK(std::abs(report.payg.q[0] - report.original.q[0]) <= 1e-8);
  CHECK(std::abs(report.revenue_payg - report.revenue_original) <= 1e-8);
}

TEST_CASE("the reference tariff is dominated through the full pipeline") {
  const auto banded = DemandBasedTariff::uniform(kReferenceTariff, 2);
  const auto report = verify_payg_dominance(banded, 0.5, 1.5, kUniform);
  REQUIRE(report.original.converged);
  REQUIRE(report.payg.converged);
  CHECK(report.payg.q[0] <= report.original.q[0] + 1e-8);
  CHECK(report.revenue_payg >= report.revenue_original - 1e-6);
}

TEST_CASE("null perturbation probes report exactly zero gain") {
  const auto report =
      check_constant_price_optimality(0.3, 1.0, 1.0, kUniform, 4, 0.0);
  CHECK(report.max_gain == 0.0);
  for (const auto& probe : report.probes) CHECK(probe.gain == 0.0);
}

TEST_CASE("the probe detects a deliberately suboptimal price") {
  SearchConfig quick;
  quick.grid_f = 2;
  quick.f_max = 0.0;
  quick.grid_p = 21;
  quick.refine_tol = 1e-5;
  const MonopolyMarket market{1.0, 1.0, kUniform};
  const auto opt = optimize_fees(0.0, market, Objective::revenue, quick);
  const auto weak = check_constant_price_optimality(0.5 * opt.p_opt, 1.0, 1.0,
                                                    kUniform, 4, 0.02);
  CHECK(weak.max_gain > 1e-6);
  const auto strong =
      check_constant_price_optimality(opt.p_opt, 1.0, 1.0, kUniform, 4, 0.02);
  CHECK(strong.max_gain <= 1e-4);
}

TEST_CASE("optimal pay-as-you-go revenue dominates random fixed tariffs") {
  SearchConfig quick;
  quick.grid_f = 2;
  quick.f_max = 0.0;
  quick.grid_p = 21;
  quick.refine_tol = 1e-5;
  const MonopolyMarket market{1.0, 1.0, kUniform};
  const auto best = optimize_fees(0.0, market, Objective::revenue, quick);

  Rng rng(402);
  for (int trial = 0; trial < 8; ++trial) {
    const Tariff t = verify_detail::draw_tariff(rng);
    const auto eq = solve_monopoly({t, 1.0}, 1.0, kUniform);
    MarketScenario sc{{{t, 1.0}}, 1.0, kUniform};
    const double rev = market_metrics(sc, eq.q).revenue[0];
    CHECK(best.objective >= rev - 1e-5);
  }
}
