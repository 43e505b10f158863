#pragma once

// nettariff/quadrature.hpp — adaptive Gauss–Kronrod integration used for
// the outer (demand-coordinate) integrals of the market model.  The
// integrand may be vector-valued (one component per provider metric);
// segments are refined until every component's accumulated error estimate
// drops below the absolute tolerance, or the subdivision budget runs out.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace nettariff {

struct QuadratureOptions {
  double abs_tol = 1e-9;      // per-component absolute tolerance
  int max_intervals = 100000;  // subdivision budget
};

// Raised when the subdivision budget is exhausted before the error
// estimate reaches the requested tolerance.
class QuadratureBudgetError : public std::runtime_error {
 public:
  QuadratureBudgetError(double err, double tol, int intervals)
      : std::runtime_error("quadrature did not converge: error estimate " +
                           std::to_string(err) + " > tolerance " + std::to_string(tol) +
                           " after " + std::to_string(intervals) + " intervals"),
        error_estimate(err),
        tolerance(tol),
        intervals_used(intervals) {}
  double error_estimate;
  double tolerance;
  int intervals_used;
};

struct QuadratureResult {
  std::vector<double> value;
  double error_estimate = 0.0;  // max over components
  int intervals_used = 0;
};

// Integrand contract: f(x, out) writes `dim` components for abscissa x.
using VectorIntegrand = std::function<void(double, double*)>;

namespace detail {

// Kronrod-15 abscissae/weights with the embedded Gauss-7 rule (odd
// indices are the Gauss nodes).  Standard QUADPACK constants.
inline constexpr double kKronrodX[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kKronrodW[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double kGaussW[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

struct Segment {
  double a, b;
  std::vector<double> kronrod;  // K15 estimate per component
  double err;                   // max-norm |K15 - G7|
};

// Evaluate one segment with the 15-point Kronrod rule and its embedded
// Gauss-7 estimate; err is the max-norm discrepancy between the two.
inline Segment evaluate_segment(const VectorIntegrand& f, std::size_t dim,
                                double a, double b, std::vector<double>& scratch) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  std::vector<double> k(dim, 0.0), g(dim, 0.0);
  scratch.resize(dim);

  auto accumulate = [&](double x, double wk, double wg) {
    f(x, scratch.data());
    for (std::size_t c = 0; c < dim; ++c) {
      k[c] += wk * scratch[c];
      if (wg != 0.0) g[c] += wg * scratch[c];
    }
  };

  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodX[i];
    const double wg = (i % 2 == 1) ? kGaussW[i / 2] : 0.0;
    accumulate(mid - dx, kKronrodW[i], wg);
    accumulate(mid + dx, kKronrodW[i], wg);
  }
  accumulate(mid, kKronrodW[7], kGaussW[3]);

  Segment seg;
  seg.a = a;
  seg.b = b;
  seg.err = 0.0;
  seg.kronrod.resize(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    seg.kronrod[c] = half * k[c];
    seg.err = std::max(seg.err, std::abs(half * (k[c] - g[c])));
  }
  return seg;
}

}  // namespace detail

/// Integrate a `dim`-component integrand over [a, b].  `breakpoints`
/// (values outside (a, b) are ignored) pre-split the domain where the
/// integrand is known to lose smoothness, e.g. where a data cap starts to
/// bind; adaptive bisection of the worst segment then drives the summed
/// per-component error estimate below opts.abs_tol.
inline QuadratureResult integrate(const VectorIntegrand& f, std::size_t dim,
                                  double a, double b,
                                  std::vector<double> breakpoints,
                                  const QuadratureOptions& opts = {}) {
  QuadratureResult result;
  result.value.assign(dim, 0.0);
  if (!(b > a)) return result;

  breakpoints.push_back(a);
  breakpoints.push_back(b);
  std::sort(breakpoints.begin(), breakpoints.end());

  auto cmp = [](const detail::Segment& x, const detail::Segment& y) {
    return x.err < y.err;
  };
  std::priority_queue<detail::Segment, std::vector<detail::Segment>, decltype(cmp)>
      queue(cmp);
  std::vector<double> scratch;

  int used = 0;
  double lo = a;
  for (double x : breakpoints) {
    if (!(x > lo) || x >= b) continue;
    queue.push(detail::evaluate_segment(f, dim, lo, x, scratch));
    ++used;
    lo = x;
  }
  queue.push(detail::evaluate_segment(f, dim, lo, b, scratch));
  ++used;

  // The queue only exposes its top, so the summed error is tracked
  // incrementally across refinements.
  double err_sum = 0.0;
  {
    std::vector<detail::Segment> tmp;
    while (!queue.empty()) {
      err_sum += queue.top().err;
      tmp.push_back(queue.top());
      queue.pop();
    }
    for (auto& s : tmp) queue.push(std::move(s));
  }

  while (err_sum > opts.abs_tol && !queue.empty()) {
    detail::Segment worst = queue.top();
    queue.pop();
    const double width = worst.b - worst.a;
    if (width <= std::abs(worst.a) * 1e-15 + 1e-300) {
      // Segment at floating-point resolution: accept its contribution.
      queue.push(std::move(worst));
      break;
    }
    if (used + 1 > opts.max_intervals)
      throw QuadratureBudgetError(err_sum, opts.abs_tol, used);

    err_sum -= worst.err;
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::evaluate_segment(f, dim, worst.a, mid, scratch);
    auto right = detail::evaluate_segment(f, dim, mid, worst.b, scratch);
    err_sum += left.err + right.err;
    queue.push(std::move(left));
    queue.push(std::move(right));
    ++used;
  }

  while (!queue.empty()) {
    const auto& seg = queue.top();
    for (std::size_t c = 0; c < dim; ++c) result.value[c] += seg.kronrod[c];
    queue.pop();
  }
  result.error_estimate = err_sum;
  result.intervals_used = used;
  return result;
}

/// Scalar convenience wrapper.
template <typename F>
QuadratureResult integrate_scalar(F&& f, double a, double b,
                                  std::vector<double> breakpoints = {},
                                  const QuadratureOptions& opts = {}) {
  VectorIntegrand vf = [&f](double x, double* out) { out[0] = f(x); };
  return integrate(vf, 1, a, b, std::move(breakpoints), opts);
}

}  // namespace nettariff
