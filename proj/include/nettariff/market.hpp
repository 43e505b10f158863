#pragma once

// nettariff/market.hpp — market shares and aggregate metrics at fixed
// congestion levels.
//
// For a fixed demand coordinate u, every provider's optimal utility is
// piecewise linear in the value coordinate v (at most one kink, at
// v = per_unit).  Share boundaries are therefore exact roots of linear
// pieces; the inner v-integrals of measure, load, revenue and welfare are
// evaluated in closed form between analytically located breakpoints, and
// only the outer u-integral is done numerically (adaptive Gauss–Kronrod
// in the CDF-transformed coordinate x = F_u(u), which absorbs the
// u-distribution weight exactly).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nettariff/model.hpp"
#include "nettariff/quadrature.hpp"

namespace nettariff {

// Identifier of the zero-fee outside option in winner assignments.
inline constexpr int kFreeProvider = -1;

struct ProviderConfig {
  Tariff tariff;
  double capacity = 1.0;

  void validate() const {
    tariff.validate();
    if (!(capacity > 0.0) || !std::isfinite(capacity))
      throw std::domain_error("provider: capacity must be > 0 and finite");
  }
};

struct MarketScenario {
  std::vector<ProviderConfig> providers;
  double free_congestion = kInfiniteCongestion;  // q0; +inf => pure monopoly
  UserDistribution dist;

  void validate() const {
    if (providers.empty())
      throw std::domain_error("scenario: at least one provider required");
    for (const auto& p : providers) p.validate();
    if (!(free_congestion >= 0.0))
      throw std::domain_error("scenario: free congestion must be >= 0");
    dist.validate();
  }
};

/// Provider preferred by one user at fixed congestion levels.  Returns
/// kFreeProvider when the outside option strictly beats every provider;
/// ties go to a normal provider over the free one, then to the lowest
/// provider index.
inline int best_provider(const UserType& user, const MarketScenario& scenario,
                         std::span<const double> q) {
  const double pi_free = free_utility(user, scenario.free_congestion);
  int best = kFreeProvider;
  double best_util = 0.0;
  for (std::size_t i = 0; i < scenario.providers.size(); ++i) {
    const double pi = optimal_utility(user, scenario.providers[i].tariff, q[i]);
    if (best == kFreeProvider || pi > best_util) {
      best = static_cast<int>(i);
      best_util = pi;
    }
  }
  return best_util >= pi_free ? best : kFreeProvider;
}

// ---------------------------------------------------------------------------
// Per-u share slices
// ---------------------------------------------------------------------------

struct ShareSlice {
  struct Interval {
    double lo, hi;
    int provider;  // provider index or kFreeProvider
  };
  double u = 0.0;
  std::vector<Interval> intervals;  // partition of [0,1], ascending
};

// Metrics of one provider conditional on demand coordinate u: inner
// v-integrals against dF_v (no u-weight applied).
struct SliceMetrics {
  double measure = 0.0;  // mu_v of the provider's v-interval(s)
  double load = 0.0;     // ∫ y* dF_v
  double revenue = 0.0;  // ∫ t(y*) dF_v
  double welfare = 0.0;  // ∫ v y* dF_v
};

namespace detail {

// Usage/charge of a user in the winning branch at (u, v): below-cap users
// and v >= p users take the full achievable demand, v < p users stop at
// the cap.
inline void branch_usage(double rho, const Tariff& t, double v, double* y_out,
                         double* charge_out) {
  if (rho > t.cap && v < t.per_unit) {
    *y_out = t.cap;
    *charge_out = t.lump_sum;
  } else {
    *y_out = rho;
    *charge_out = t.lump_sum +
                  (rho > t.cap ? t.per_unit * (rho - t.cap) : 0.0);
  }
}

struct SliceWorkspace {
  std::vector<double> breaks;
  std::vector<double> util;   // per provider, at current cell midpoint
  std::vector<double> rho;    // per provider
  std::vector<Tariff> tariffs;
};

// Candidate v-breakpoints for fixed u: kinks at each per-unit fee plus
// all pairwise crossings of the linear utility pieces (provider pieces
// and the free option's line).  Extra candidates are harmless; cells are
// classified by their midpoint.
inline void collect_breakpoints(const SliceWorkspace& ws, double rho_free,
                                std::size_t n, std::vector<double>& breaks) {
  breaks.clear();
  breaks.push_back(0.0);
  breaks.push_back(1.0);

  // Each provider contributes up to two (slope, intercept) lines.
  struct Line {
    double slope, icept;
  };
  std::vector<Line> lines;
  lines.reserve(2 * n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Tariff& t = ws.tariffs[i];
    const double rho = ws.rho[i];
    if (rho <= t.cap) {
      lines.push_back({rho, -t.lump_sum});
    } else {
      lines.push_back({t.cap, -t.lump_sum});
      lines.push_back({rho, -t.lump_sum - t.per_unit * (rho - t.cap)});
      if (t.per_unit > 0.0 && t.per_unit < 1.0) breaks.push_back(t.per_unit);
    }
  }
  lines.push_back({rho_free, 0.0});

  for (std::size_t a = 0; a < lines.size(); ++a) {
    for (std::size_t b = a + 1; b < lines.size(); ++b) {
      const double ds = lines[a].slope - lines[b].slope;
      if (ds == 0.0) continue;
      const double v = (lines[b].icept - lines[a].icept) / ds;
      if (v > 0.0 && v < 1.0) breaks.push_back(v);
    }
  }
  std::sort(breaks.begin(), breaks.end());
}

// Inner v-integration at fixed u.  Writes 4 values per provider
// (measure, load, revenue, welfare) into `out`.  Exact ties between
// identical providers split the cell mass evenly so that symmetric
// scenarios induce symmetric loads; the pointwise tie rule (lowest index)
// only differs from this on those degenerate duplicates.
inline void slice_accumulate(double u, std::span<const double> q, double q0,
                             double beta, SliceWorkspace& ws, double* out) {
  const std::size_t n = ws.tariffs.size();
  std::fill(out, out + 4 * n, 0.0);

  ws.rho.resize(n);
  ws.util.resize(n);
  for (std::size_t i = 0; i < n; ++i) ws.rho[i] = achievable_demand(u, q[i]);
  const double rho_free = achievable_demand(u, q0);

  collect_breakpoints(ws, rho_free, n, ws.breaks);

  double prev_cdf = 0.0;  // F_v at cell lower edge
  double prev_m1 = 0.0;   // ∫_0^lo v dF_v
  const double m1_scale = beta / (beta + 1.0);

  for (std::size_t c = 0; c + 1 < ws.breaks.size(); ++c) {
    const double lo = ws.breaks[c];
    const double hi = ws.breaks[c + 1];
    const double cdf_hi = std::pow(hi, beta);
    const double m1_hi = m1_scale * std::pow(hi, beta + 1.0);
    const double dm = cdf_hi - prev_cdf;
    const double dm1 = m1_hi - prev_m1;
    prev_cdf = cdf_hi;
    prev_m1 = m1_hi;
    if (!(hi - lo > 1e-15)) continue;
    const double mid = 0.5 * (lo + hi);

    const UserType user{u, mid};
    double best_util = 0.0;
    int ties = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ws.util[i] = optimal_utility(user, ws.tariffs[i], q[i]);
      if (i == 0 || ws.util[i] > best_util) {
        best_util = ws.util[i];
        ties = 1;
      } else if (ws.util[i] == best_util) {
        ++ties;
      }
    }
    const double pi_free = user.value * rho_free;
    if (best_util < pi_free) continue;  // cell belongs to the free option

    const double w = 1.0 / ties;
    for (std::size_t i = 0; i < n; ++i) {
      if (ws.util[i] != best_util) continue;
      double y, t;
      branch_usage(ws.rho[i], ws.tariffs[i], mid, &y, &t);
      out[4 * i + 0] += w * dm;
      out[4 * i + 1] += w * y * dm;
      out[4 * i + 2] += w * t * dm;
      out[4 * i + 3] += w * y * dm1;
    }
  }
}

}  // namespace detail

/// Market-share slice at demand coordinate u: the partition of the value
/// axis [0,1] into maximal intervals won by each provider or by the free
/// option, under the pointwise tie rule of best_provider.
inline ShareSlice share_slice(double u, const MarketScenario& scenario,
                              std::span<const double> q) {
  detail::SliceWorkspace ws;
  const std::size_t n = scenario.providers.size();
  ws.tariffs.resize(n);
  ws.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws.tariffs[i] = scenario.providers[i].tariff;
    ws.rho[i] = achievable_demand(u, q[i]);
  }
  const double rho_free = achievable_demand(u, scenario.free_congestion);
  detail::collect_breakpoints(ws, rho_free, n, ws.breaks);

  ShareSlice slice;
  slice.u = u;
  for (std::size_t c = 0; c + 1 < ws.breaks.size(); ++c) {
    const double lo = ws.breaks[c];
    const double hi = ws.breaks[c + 1];
    if (!(hi > lo)) continue;
    const int winner = best_provider({u, 0.5 * (lo + hi)}, scenario, q);
    if (!slice.intervals.empty() && slice.intervals.back().provider == winner) {
      slice.intervals.back().hi = hi;
    } else {
      slice.intervals.push_back({lo, hi, winner});
    }
  }
  return slice;
}

/// Per-provider inner v-integrals at fixed u (densities conditional on u).
inline std::vector<SliceMetrics> slice_metrics(double u,
                                               const MarketScenario& scenario,
                                               std::span<const double> q) {
  detail::SliceWorkspace ws;
  const std::size_t n = scenario.providers.size();
  ws.tariffs.resize(n);
  for (std::size_t i = 0; i < n; ++i) ws.tariffs[i] = scenario.providers[i].tariff;
  std::vector<double> out(4 * n);
  detail::slice_accumulate(u, q, scenario.free_congestion, scenario.dist.beta,
                           ws, out.data());
  std::vector<SliceMetrics> metrics(n);
  for (std::size_t i = 0; i < n; ++i)
    metrics[i] = {out[4 * i], out[4 * i + 1], out[4 * i + 2], out[4 * i + 3]};
  return metrics;
}

// ---------------------------------------------------------------------------
// Aggregate metrics (outer u-integration)
// ---------------------------------------------------------------------------

struct MarketMetrics {
  std::vector<double> share;    // mu(Phi_i)
  std::vector<double> load;     // d_i
  std::vector<double> revenue;  // R_i
  std::vector<double> welfare;  // S_i
  double error_estimate = 0.0;
  int intervals_used = 0;
};

namespace detail {

// u-coordinates where some provider's cap starts to bind
// (rho(u, q_i) = g_i), mapped into the CDF coordinate.
inline std::vector<double> cap_breakpoints_x(const std::vector<Tariff>& tariffs,
                                             std::span<const double> q,
                                             const UserDistribution& dist) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < tariffs.size(); ++i) {
    const double g = tariffs[i].cap;
    if (g <= 0.0 || is_unlimited(g) || std::isinf(q[i])) continue;
    const double u_star = g * std::exp(q[i]);
    if (u_star < 1.0) xs.push_back(dist.cdf_u(u_star));
  }
  return xs;
}

}  // namespace detail

/// Share measure, data load, revenue and gross welfare of every provider
/// at fixed congestion levels.  One adaptive pass integrates all metrics
/// simultaneously; error_estimate bounds each reported component.
inline MarketMetrics market_metrics(const MarketScenario& scenario,
                                    std::span<const double> q,
                                    const QuadratureOptions& opts = {}) {
  const std::size_t n = scenario.providers.size();
  if (q.size() != n)
    throw std::domain_error("market_metrics: congestion vector size mismatch");

  detail::SliceWorkspace ws;
  ws.tariffs.resize(n);
  for (std::size_t i = 0; i < n; ++i) ws.tariffs[i] = scenario.providers[i].tariff;

  const UserDistribution& dist = scenario.dist;
  VectorIntegrand f = [&](double x, double* out) {
    detail::slice_accumulate(dist.quantile_u(x), q, scenario.free_congestion,
                             dist.beta, ws, out);
  };
  auto result = integrate(f, 4 * n, 0.0, 1.0,
                          detail::cap_breakpoints_x(ws.tariffs, q, dist), opts);

  MarketMetrics m;
  m.share.resize(n);
  m.load.resize(n);
  m.revenue.resize(n);
  m.welfare.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.share[i] = result.value[4 * i];
    m.load[i] = result.value[4 * i + 1];
    m.revenue[i] = result.value[4 * i + 2];
    m.welfare[i] = result.value[4 * i + 3];
  }
  m.error_estimate = result.error_estimate;
  m.intervals_used = result.intervals_used;
  return m;
}

/// Aggregate data demand of provider `i`'s share region.
inline double data_load(std::size_t i, const MarketScenario& scenario,
                        std::span<const double> q,
                        const QuadratureOptions& opts = {}) {
  return market_metrics(scenario, q, opts).load.at(i);
}

/// Revenue collected by provider `i` at fixed congestion levels.
inline double revenue(std::size_t i, const MarketScenario& scenario,
                      std::span<const double> q,
                      const QuadratureOptions& opts = {}) {
  return market_metrics(scenario, q, opts).revenue.at(i);
}

/// Gross welfare (total traffic value) generated by provider `i`.
inline double welfare(std::size_t i, const MarketScenario& scenario,
                      std::span<const double> q,
                      const QuadratureOptions& opts = {}) {
  return market_metrics(scenario, q, opts).welfare.at(i);
}

}  // namespace nettariff
