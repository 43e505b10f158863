#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nettariff/quadrature.hpp"

using namespace nettariff;

TEST_CASE("polynomials integrate exactly") {
  auto r = integrate_scalar([](double x) { return x * x * x * x; }, 0.0, 1.0);
  CHECK(r.value[0] == Catch::Approx(0.2).margin(1e-14));
  CHECK(r.intervals_used == 1);

  r = integrate_scalar([](double) { return 1.0; }, -2.0, 3.0);
  CHECK(r.value[0] == Catch::Approx(5.0).margin(1e-14));
}

TEST_CASE("smooth transcendental integrand meets the tolerance") {
  QuadratureOptions opts;
  opts.abs_tol = 1e-12;
  auto r = integrate_scalar([](double x) { return std::exp(-x) * std::sin(5 * x); },
                            0.0, 4.0, {}, opts);
  // antiderivative of e^{-x} sin(5x): -(e^{-x}/26)(sin 5x + 5 cos 5x)
  auto antider = [](double x) {
    return -(std::exp(-x) / 26.0) * (std::sin(5 * x) + 5 * std::cos(5 * x));
  };
  CHECK(r.value[0] == Catch::Approx(antider(4.0) - antider(0.0)).margin(1e-12));
}

TEST_CASE("kinked integrand converges with and without a breakpoint hint") {
  auto kink = [](double x) { return std::abs(x - 0.3); };
  const double exact = (0.3 * 0.3 + 0.7 * 0.7) / 2.0;
  auto hinted = integrate_scalar(kink, 0.0, 1.0, {0.3});
  auto blind = integrate_scalar(kink, 0.0, 1.0);
  CHECK(hinted.value[0] == Catch::Approx(exact).margin(1e-12));
  CHECK(blind.value[0] == Catch::Approx(exact).margin(1e-9));
  CHECK(hinted.intervals_used <= blind.intervals_used);
}

TEST_CASE("breakpoints outside the domain are ignored") {
  auto r = integrate_scalar([](double x) { return x; }, 0.0, 1.0,
                            {-0.5, 0.25, 1.5, 0.25});
  CHECK(r.value[0] == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("subdivision budget exhaustion raises a diagnostic error") {
  QuadratureOptions opts;
  opts.abs_tol = 1e-16;
  opts.max_intervals = 4;
  CHECK_THROWS_AS(
      integrate_scalar([](double x) { return std::sin(40.0 * x) / (x + 1e-3); },
                       0.0, 1.0, {}, opts),
      QuadratureBudgetError);
}

TEST_CASE("vector integrands share one adaptive pass") {
  VectorIntegrand f = [](double x, double* out) {
    out[0] = x;
    out[1] = std::cos(20.0 * x);
  };
  auto r = integrate(f, 2, 0.0, 1.0, {});
  CHECK(r.value[0] == Catch::Approx(0.5).margin(1e-10));
  CHECK(r.value[1] == Catch::Approx(std::sin(20.0) / 20.0).margin(1e-10));
}

TEST_CASE("error estimate bounds the change under tighter tolerance") {
  auto f = [](double x) { return std::sqrt(x + 1e-4) * std::sin(3 * x); };
  QuadratureOptions loose;
  loose.abs_tol = 1e-6;
  QuadratureOptions tight;
  tight.abs_tol = 5e-7;
  auto a = integrate_scalar(f, 0.0, 1.0, {}, loose);
  auto b = integrate_scalar(f, 0.0, 1.0, {}, tight);
  CHECK(std::abs(a.value[0] - b.value[0]) <= a.error_estimate + 1e-15);
}

TEST_CASE("empty and inverted ranges integrate to zero") {
  auto r = integrate_scalar([](double x) { return x; }, 1.0, 1.0);
  CHECK(r.value[0] == 0.0);
  r = integrate_scalar([](double x) { return x; }, 2.0, 1.0);
  CHECK(r.value[0] == 0.0);
}
