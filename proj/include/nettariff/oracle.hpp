#pragma once

// nettariff/oracle.hpp — brute-force verifier on a dense weighted agent
// grid.  Every integral of the market model is replaced by a finite sum
// over cell-midpoint agents whose weights are exact cell measures (CDF
// differences), so oracle runs are deterministic, bit-reproducible and
// converge first-order in the grid resolution.  The grid also supports
// the scale transform between a normalized market and an un-normalized
// one (domain [0,U]x[0,V], total user mass 1/k), which makes the
// normalization-invariance checks exact up to rounding.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nettariff/equilibrium.hpp"
#include "nettariff/market.hpp"
#include "nettariff/model.hpp"

namespace nettariff {

// ---------------------------------------------------------------------------
// AgentGrid — separable product grid of (user type, weight) agents
// ---------------------------------------------------------------------------
// Agent (i, j) sits at (u_mid[i], v_mid[j]) with weight
// u_weight[i] * v_weight[j]; the separable storage keeps a 2000x2000 grid
// cheap while enumerating exactly the same agents as a flat list.
struct AgentGrid {
  std::vector<double> u_mid, v_mid;
  std::vector<double> u_weight, v_weight;

  std::size_t nu() const { return u_mid.size(); }
  std::size_t nv() const { return v_mid.size(); }

  double total_weight() const {
    double su = 0.0, sv = 0.0;
    for (double w : u_weight) su += w;
    for (double w : v_weight) sv += w;
    return su * sv;
  }
};

/// Build a normalized n_u x n_v grid: uniform coordinate cells on [0,1]^2,
/// agents at cell midpoints, weights equal to exact cell measures
/// [F_u(u_{i+1}) - F_u(u_i)] * [F_v(v_{j+1}) - F_v(v_j)].
inline AgentGrid build_grid(const UserDistribution& dist, int n_u, int n_v) {
  if (n_u < 1 || n_v < 1)
    throw std::domain_error("build_grid: resolutions must be >= 1");
  dist.validate();
  AgentGrid g;
  g.u_mid.resize(n_u);
  g.u_weight.resize(n_u);
  g.v_mid.resize(n_v);
  g.v_weight.resize(n_v);
  double prev = 0.0;
  for (int i = 0; i < n_u; ++i) {
    const double hi = dist.cdf_u(double(i + 1) / n_u);
    g.u_mid[i] = (i + 0.5) / n_u;
    g.u_weight[i] = hi - prev;
    prev = hi;
  }
  prev = 0.0;
  for (int j = 0; j < n_v; ++j) {
    const double hi = dist.cdf_v(double(j + 1) / n_v);
    g.v_mid[j] = (j + 0.5) / n_v;
    g.v_weight[j] = hi - prev;
    prev = hi;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Normalization transform (scale invariance of the equilibrium)
// ---------------------------------------------------------------------------
// A market on [0,U]x[0,V] with user mass 1/k and parameters (g, f, p, c)
// normalizes to the unit square with f/(UV), g/U, p/V and k*c/U; the
// equilibrium congestion is unchanged and loads scale by U/k.
struct ScaleTransform {
  double k = 1.0, U = 1.0, V = 1.0;
};

inline Tariff normalize_tariff(const Tariff& t, const ScaleTransform& s) {
  return {t.cap / s.U, t.lump_sum / (s.U * s.V), t.per_unit / s.V};
}

inline Tariff denormalize_tariff(const Tariff& t, const ScaleTransform& s) {
  return {t.cap * s.U, t.lump_sum * (s.U * s.V), t.per_unit * s.V};
}

inline double normalize_capacity(double c, const ScaleTransform& s) {
  return s.k * c / s.U;
}

inline double denormalize_capacity(double c, const ScaleTransform& s) {
  return c * s.U / s.k;
}

/// Map a normalized grid to the un-normalized market: coordinates scale to
/// [0,U]x[0,V] and the total user mass becomes 1/k.
inline AgentGrid denormalize_grid(const AgentGrid& g, const ScaleTransform& s) {
  AgentGrid out = g;
  for (auto& u : out.u_mid) u *= s.U;
  for (auto& v : out.v_mid) v *= s.V;
  for (auto& w : out.u_weight) w /= s.k;
  return out;
}

// ---------------------------------------------------------------------------
// Oracle metrics and equilibrium
// ---------------------------------------------------------------------------

struct OracleMetrics {
  std::vector<double> share, load, revenue, welfare;
};

/// Route every agent to its best provider and accumulate weighted sums of
/// usage, charge and traffic value.  Summation runs in a fixed agent
/// order so results are bit-reproducible.
inline OracleMetrics oracle_metrics(const AgentGrid& grid,
                                    const MarketScenario& scenario,
                                    std::span<const double> q) {
  const std::size_t n = scenario.providers.size();
  if (q.size() != n)
    throw std::domain_error("oracle_metrics: congestion vector size mismatch");

  OracleMetrics m;
  m.share.assign(n, 0.0);
  m.load.assign(n, 0.0);
  m.revenue.assign(n, 0.0);
  m.welfare.assign(n, 0.0);

  std::vector<double> decay(n);
  for (std::size_t i = 0; i < n; ++i)
    decay[i] = std::isinf(q[i]) ? 0.0 : std::exp(-q[i]);
  const double decay_free = std::isinf(scenario.free_congestion)
                                ? 0.0
                                : std::exp(-scenario.free_congestion);

  for (std::size_t iu = 0; iu < grid.nu(); ++iu) {
    const double u = grid.u_mid[iu];
    const double wu = grid.u_weight[iu];
    for (std::size_t jv = 0; jv < grid.nv(); ++jv) {
      const double v = grid.v_mid[jv];
      const double w = wu * grid.v_weight[jv];

      // Same preference rule as best_provider: highest utility, normal
      // provider over free on ties, then lowest index.
      int best = kFreeProvider;
      double best_util = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double util =
            utility_given_rho(u * decay[i], v, scenario.providers[i].tariff);
        if (best == kFreeProvider || util > best_util) {
          best = static_cast<int>(i);
          best_util = util;
        }
      }
      if (best_util < v * (u * decay_free)) continue;

      const double rho = u * decay[best];
      const Tariff& t = scenario.providers[best].tariff;
      const double y = usage_given_rho(rho, v, t);
      m.share[best] += w;
      m.load[best] += w * y;
      m.revenue[best] += w * charge(y, t);
      m.welfare[best] += w * v * y;
    }
  }
  return m;
}

/// Monopoly equilibrium with the agent-grid load replacing the quadrature
/// load: same bisection, discrete measure.
inline EquilibriumResult oracle_equilibrium(const AgentGrid& grid,
                                            const ProviderConfig& provider,
                                            double q0,
                                            const SolveOptions& opts = {}) {
  provider.validate();
  MarketScenario scenario{{provider}, q0, UserDistribution{}};
  auto load = [&](double q) {
    const double qv[1] = {q};
    return oracle_metrics(grid, scenario, qv).load[0];
  };
  return solve_congestion_fixed_point(load, provider.capacity, q0, opts);
}

}  // namespace nettariff
