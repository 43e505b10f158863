#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nettariff/model.hpp"
#include "nettariff/verify.hpp"

using namespace nettariff;

TEST_CASE("charge follows the two-part structure") {
  const Tariff t{0.4, 0.1, 0.6};
  CHECK(charge(0.3, t) == Catch::Approx(0.1).margin(1e-15));  // below cap
  CHECK(charge(0.5, t) == Catch::Approx(0.1 + 0.6 * 0.1).margin(1e-12));
  CHECK(charge(0.4, t) == Catch::Approx(0.1).margin(1e-15));  // exactly at cap
  CHECK(charge(0.0, t) == 0.1);

  const Tariff flat = Tariff::flat_rate(0.25);
  CHECK(charge(123.0, flat) == 0.25);
  CHECK_THROWS_AS(charge(-0.1, t), std::domain_error);
}

TEST_CASE("charge is non-decreasing, convex and piecewise linear in usage") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Tariff t{rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.5),
                   rng.uniform(0.0, 1.2)};
    double prev = charge(0.0, t);
    double prev_slope = -1.0;
    for (int i = 1; i <= 200; ++i) {
      const double y = i * 0.01;
      const double cur = charge(y, t);
      const double slope = (cur - prev) / 0.01;
      CHECK(cur >= prev - 1e-15);
      CHECK(slope >= prev_slope - 1e-9);  // convexity
      prev = cur;
      prev_slope = slope;
    }
  }
}

TEST_CASE("achievable demand decays exponentially with congestion") {
  CHECK(achievable_demand(1.0, 0.0) == 1.0);
  CHECK(achievable_demand(0.7, kInfiniteCongestion) == 0.0);
  CHECK(achievable_demand(0.9, 0.3387) == Catch::Approx(0.64142).margin(1e-5));
  CHECK_THROWS_AS(achievable_demand(-1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(achievable_demand(0.5, -0.1), std::domain_error);

  // strictly decreasing in q for u > 0
  double prev = achievable_demand(0.9, 0.0);
  for (double q = 0.25; q < 5.0; q += 0.25) {
    const double cur = achievable_demand(0.9, q);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("optimal usage matches the cap/indicator cases") {
  const Tariff t{0.4, 0.1, 0.6};
  const double q = 0.3387;
  CHECK(optimal_usage({0.9, 0.8}, t, q) == Catch::Approx(0.64142).margin(1e-5));
  CHECK(optimal_usage({0.9, 0.5}, t, q) == 0.4);  // v < p: stop at cap
  CHECK(optimal_usage({0.2, 0.1}, t, q) == Catch::Approx(0.14254).margin(1e-5));
  // at v == p the indicator is strict: full achievable demand
  CHECK(optimal_usage({0.9, 0.6}, t, q) ==
        Catch::Approx(achievable_demand(0.9, q)).margin(0));
}

TEST_CASE("optimal utility closed form") {
  const Tariff t{0.4, 0.1, 0.6};
  CHECK(optimal_utility({0.5, 0.0}, t, 0.2) == Catch::Approx(-0.1).margin(1e-15));
  CHECK(optimal_utility({0.9, 0.8}, t, 0.3387) ==
        Catch::Approx(0.26828).margin(1e-5));
  // free provider utility
  CHECK(free_utility({0.9, 0.8}, 1.5) == Catch::Approx(0.16065).margin(1e-5));
  CHECK(free_utility({0.9, 0.8}, kInfiniteCongestion) == 0.0);
}

TEST_CASE("usage and utility bounds and monotonicity on random grids") {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const UserType user{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const Tariff t{rng.bernoulli(0.2) ? kUnlimited : rng.uniform(0.0, 1.0),
                   rng.uniform(0.0, 0.5), rng.uniform(0.0, 1.2)};
    const double q = rng.uniform(0.0, 3.0);

    const double rho = achievable_demand(user.demand, q);
    const double y = optimal_usage(user, t, q);
    CHECK(y >= 0.0);
    CHECK(y <= rho + 1e-15);
    CHECK(rho <= user.demand + 1e-15);

    const double eps = 0.05;
    // non-decreasing in u, v, g; non-increasing in p, q
    CHECK(optimal_usage({user.demand + eps, user.value}, t, q) >= y - 1e-12);
    CHECK(optimal_usage({user.demand, user.value + eps}, t, q) >= y - 1e-12);
    if (!t.is_flat_rate()) {
      Tariff t2 = t;
      t2.cap += eps;
      CHECK(optimal_usage(user, t2, q) >= y - 1e-12);
    }
    Tariff t3 = t;
    t3.per_unit += eps;
    CHECK(optimal_usage(user, t3, q) <= y + 1e-12);
    CHECK(optimal_usage(user, t, q + eps) <= y + 1e-12);
  }
}

TEST_CASE("optimal usage maximizes utility over the feasible range") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const UserType user{rng.uniform(0.01, 1.0), rng.uniform(0.0, 1.0)};
    const Tariff t{rng.bernoulli(0.2) ? kUnlimited : rng.uniform(0.0, 1.0),
                   rng.uniform(0.0, 0.5), rng.uniform(0.0, 1.2)};
    const double q = rng.uniform(0.0, 2.0);
    const double rho = achievable_demand(user.demand, q);
    const double best = optimal_utility(user, t, q);
    for (int i = 0; i <= 100; ++i) {
      const double y = rho * i / 100.0;
      CHECK(best >= user.value * y - charge(y, t) - 1e-12);
    }
  }
}

TEST_CASE("utility is piecewise linear in v with one kink at the per-unit fee") {
  Rng rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const double u = rng.uniform(0.1, 1.0);
    const double q = rng.uniform(0.0, 1.5);
    const Tariff t{rng.uniform(0.0, 0.8), rng.uniform(0.0, 0.4),
                   rng.uniform(0.1, 0.9)};
    auto util = [&](double v) { return optimal_utility({u, v}, t, q); };

    double prev = util(0.0);
    for (int i = 1; i <= 100; ++i) {
      const double cur = util(i * 0.01);
      CHECK(cur >= prev - 1e-12);  // non-decreasing in v
      prev = cur;
    }
    // linear strictly inside each side of the kink
    for (double v : {0.3 * t.per_unit, t.per_unit + 0.7 * (1 - t.per_unit)}) {
      const double h = 1e-3;
      if (v - h <= 0.0 || v + h >= 1.0) continue;
      if (std::abs(v - t.per_unit) < 2 * h) continue;
      const double second_diff = util(v + h) - 2 * util(v) + util(v - h);
      CHECK(std::abs(second_diff) <= 1e-12);
    }
    // non-increasing in q, f, p; non-decreasing in g
    const UserType user{u, rng.uniform(0.0, 1.0)};
    const double base = optimal_utility(user, t, q);
    CHECK(optimal_utility(user, t, q + 0.1) <= base + 1e-12);
    Tariff dearer = t;
    dearer.lump_sum += 0.1;
    CHECK(optimal_utility(user, dearer, q) <= base + 1e-12);
    dearer = t;
    dearer.per_unit += 0.1;
    CHECK(optimal_utility(user, dearer, q) <= base + 1e-12);
    Tariff roomier = t;
    roomier.cap += 0.1;
    CHECK(optimal_utility(user, roomier, q) >= base - 1e-12);
  }
}

TEST_CASE("congestion and its inverse") {
  CHECK(congestion(0.1693, 0.5) == Catch::Approx(0.3387).margin(1e-4));
  CHECK(congestion(0.0, 2.0) == 0.0);
  CHECK(congestion(1.0, 1.0) == 1.0);
  CHECK_THROWS_AS(congestion(0.1, 0.0), std::domain_error);
  CHECK_THROWS_AS(congestion(0.1, -1.0), std::domain_error);

  CHECK(inverse_congestion(0.3387, 0.5) == Catch::Approx(0.16935).margin(1e-9));
  CHECK(inverse_congestion(0.0, 3.0) == 0.0);
  CHECK_THROWS_AS(inverse_congestion(kInfiniteCongestion, 1.0), std::domain_error);

  // round trip to machine precision ((d/c)*c incurs two roundings)
  CHECK(inverse_congestion(congestion(0.7, 0.3), 0.3) ==
        Catch::Approx(0.7).epsilon(1e-15));
  Rng rng(44);
  for (int i = 0; i < 100; ++i) {
    const double d = rng.uniform(0.0, 2.0);
    const double c = rng.uniform(0.1, 3.0);
    CHECK(inverse_congestion(congestion(d, c), c) ==
          Catch::Approx(d).epsilon(4e-16).margin(1e-300));
  }
}

TEST_CASE("tariff and distribution validation") {
  CHECK_THROWS_AS((Tariff{-0.1, 0.0, 0.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Tariff{0.5, -0.1, 0.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Tariff{0.5, 0.0, -0.1}.validate()), std::domain_error);
  CHECK_NOTHROW(Tariff::flat_rate(0.2).validate());
  CHECK(Tariff::pay_as_you_go(0.3).is_pay_as_you_go());
  CHECK(Tariff::flat_rate(0.2).is_flat_rate());

  CHECK_THROWS_AS((UserDistribution{0.0, 1.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((UserDistribution{1.0, -2.0}.validate()), std::domain_error);
  const UserDistribution d{2.0, 1.0};
  CHECK(d.cdf_u(0.5) == 0.25);
  CHECK(d.cdf_u(1.0) == 1.0);
  CHECK(d.cdf_v(0.0) == 0.0);
}
