#pragma once

// nettariff/equilibrium.hpp — congestion fixed points q = Q(D(q), c).
//
// The monopoly case has a unique equilibrium: phi(q) = q - D(q)/c is
// non-decreasing because the induced load D is non-increasing in q, so a
// sign-bracketing bisection is exact and derivative-free (the load is
// only piecewise smooth across cap/indicator breakpoints, which rules
// out Newton steps).  Oligopoly equilibria need not be unique; a damped
// fixed-point iteration from q = 0 returns one fixed point with honest
// diagnostics when it fails to contract.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "nettariff/market.hpp"
#include "nettariff/model.hpp"
#include "nettariff/quadrature.hpp"

namespace nettariff {

struct SolveOptions {
  double tol = 1e-9;             // residual target |q_i - Q_i(D_i(q), c_i)|
  double bracket_width = 1e-10;  // monopoly bisection interval stop
  int max_iters = 500;           // bisection steps / oligopoly iterations
  double damping = 0.5;          // oligopoly relaxation factor, in (0, 1]
  int divergence_window = 50;    // consecutive non-decreasing residuals
  QuadratureOptions quad{1e-12, 100000};
};

struct EquilibriumResult {
  std::vector<double> q;  // congestion per provider
  std::vector<double> d;  // induced data load per provider
  double residual = 0.0;  // max_i |q_i - d_i / c_i|
  int iterations = 0;
  bool converged = false;
};

/// Monotone-bisection solver for a single provider given its induced-load
/// function.  `load` must be non-increasing in q.  The upper bracket is
/// q0 when finite (the equilibrium stays strictly below it), otherwise the
/// zero-congestion implied load D(0)/c.  After the bracket narrows to
/// bracket_width the iteration keeps halving until the fixed-point
/// residual itself meets tol, so small capacities cannot leave a stale
/// residual behind.
template <typename LoadFn>
EquilibriumResult solve_congestion_fixed_point(LoadFn&& load, double capacity,
                                               double q0,
                                               const SolveOptions& opts = {}) {
  EquilibriumResult r;
  const double d0 = load(0.0);
  if (d0 <= 0.0) {
    r.q = {0.0};
    r.d = {d0 < 0.0 ? 0.0 : d0};
    r.residual = d0 / capacity;
    r.iterations = 1;
    r.converged = true;
    return r;
  }

  double hi = std::isinf(q0) ? d0 / capacity : q0;
  double lo = 0.0;

  double best_q = 0.0, best_d = d0, best_resid = d0 / capacity;
  int iters = 1;
  auto probe = [&](double q) {
    const double d = load(q);
    const double phi = q - d / capacity;
    ++iters;
    if (std::abs(phi) < std::abs(best_resid)) {
      best_q = q;
      best_d = d;
      best_resid = phi;
    }
    return phi;
  };

  // A root is guaranteed in [0, hi]: phi(0) <= 0, and phi(hi) >= 0 both
  // for the implied-load bound and (with any positive fee) for hi = q0.
  // The one exception is a zero-lump-sum tariff whose tie-mass keeps the
  // load positive at q0 itself; that is reported as non-convergence.
  if (probe(hi) < 0.0) {
    r.q = {best_q};
    r.d = {best_d};
    r.residual = std::abs(best_resid);
    r.iterations = iters;
    r.converged = false;
    return r;
  }

  while (iters < opts.max_iters) {
    const double width = hi - lo;
    if (width < opts.bracket_width && std::abs(best_resid) <= opts.tol) break;
    if (width <= 4e-16 * std::max(1.0, hi)) break;
    const double mid = 0.5 * (lo + hi);
    if (probe(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }

  r.q = {best_q};
  r.d = {best_d};
  r.residual = std::abs(best_resid);
  r.iterations = iters;
  r.converged = r.residual <= opts.tol;
  return r;
}

/// Unique monopoly equilibrium of one provider against the free option.
inline EquilibriumResult solve_monopoly(const ProviderConfig& provider,
                                        double q0, const UserDistribution& dist,
                                        const SolveOptions& opts = {}) {
  provider.validate();
  dist.validate();
  MarketScenario scenario{{provider}, q0, dist};
  auto load = [&](double q) {
    const double qv[1] = {q};
    return market_metrics(scenario, qv, opts.quad).load[0];
  };
  return solve_congestion_fixed_point(load, provider.capacity, q0, opts);
}

/// Damped fixed-point iteration q <- (1-damping) q + damping Q(D(q)) from
/// q = 0.  Competing providers can put the default damping past the
/// oscillation threshold (the iterates 2-cycle); when the residual stops
/// decreasing for a whole detection window the damping is halved and the
/// iteration restarts from the best iterate.  If that still fails the
/// best iterate is returned with converged=false rather than hiding it.
inline EquilibriumResult solve_oligopoly(const MarketScenario& scenario,
                                         const SolveOptions& opts = {}) {
  scenario.validate();
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::domain_error("solve_oligopoly: damping must be in (0, 1]");
  const std::size_t n = scenario.providers.size();

  EquilibriumResult best;
  best.q.assign(n, 0.0);
  best.d.assign(n, 0.0);
  best.residual = std::numeric_limits<double>::infinity();

  std::vector<double> q(n, 0.0);
  double damping = opts.damping;
  double prev_residual = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int halvings = 0;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const auto m = market_metrics(scenario, q, opts.quad);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double target = m.load[i] / scenario.providers[i].capacity;
      residual = std::max(residual, std::abs(q[i] - target));
    }
    if (residual < best.residual) {
      best.q = q;
      best.d = m.load;
      best.residual = residual;
    }
    best.iterations = iter;
    if (residual <= opts.tol) break;

    stalled = residual >= prev_residual ? stalled + 1 : 0;
    if (stalled >= opts.divergence_window) {
      if (halvings >= 5) break;
      damping *= 0.5;
      ++halvings;
      q = best.q;
      stalled = 0;
      prev_residual = std::numeric_limits<double>::infinity();
      continue;
    }
    prev_residual = residual;

    for (std::size_t i = 0; i < n; ++i) {
      const double target = m.load[i] / scenario.providers[i].capacity;
      q[i] = (1.0 - damping) * q[i] + damping * target;
    }
  }
  best.converged = best.residual <= opts.tol;
  return best;
}

}  // namespace nettariff
