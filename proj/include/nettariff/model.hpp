#pragma once

// nettariff/model.hpp — user-level pricing model for congestion-prone
// network services.
//
// A provider sells data under a two-part tariff (cap g, lump-sum f,
// per-unit p).  A user of type (u, v) has desirable demand u and per-unit
// data value v; at congestion q her achievable demand is u*exp(-q).  All
// quantities are normalized so that u, v live in [0,1]; the cap and the
// congestion level admit exact "unlimited"/"infinite" sentinel states
// (IEEE +inf), under which the flat-rate and monopoly cases are exact
// rather than approximated by large floats.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nettariff {

// Sentinel for an unlimited data cap (flat-rate tariff) and for the
// infinite congestion of a dummy free provider.
inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();
inline constexpr double kInfiniteCongestion = std::numeric_limits<double>::infinity();

inline bool is_unlimited(double x) { return std::isinf(x) && x > 0; }

// ---------------------------------------------------------------------------
// Tariff — two-part pricing (cap, lump-sum, per-unit)
// ---------------------------------------------------------------------------
struct Tariff {
  double cap = kUnlimited;  // g: data units; kUnlimited => flat-rate
  double lump_sum = 0.0;    // f: money
  double per_unit = 0.0;    // p: money per data unit

  static Tariff flat_rate(double f) { return {kUnlimited, f, 0.0}; }
  static Tariff pay_as_you_go(double p) { return {0.0, 0.0, p}; }

  bool is_flat_rate() const { return is_unlimited(cap); }
  bool is_pay_as_you_go() const { return cap == 0.0 && lump_sum == 0.0; }

  void validate() const {
    if (!(cap >= 0.0)) throw std::domain_error("tariff: cap must be >= 0");
    if (!std::isfinite(lump_sum) || lump_sum < 0.0)
      throw std::domain_error("tariff: lump_sum must be finite and >= 0");
    if (!std::isfinite(per_unit) || per_unit < 0.0)
      throw std::domain_error("tariff: per_unit must be finite and >= 0");
  }
};

// ---------------------------------------------------------------------------
// UserType / UserDistribution
// ---------------------------------------------------------------------------

// A point (u, v) of the user domain.  The normalized domain is the unit
// square; scenario validation enforces that, while the pricing formulas
// below accept arbitrary non-negative magnitudes (the scale-invariance
// tests exercise un-normalized instances directly).
struct UserType {
  double demand = 0.0;  // u
  double value = 0.0;   // v
};

// Product distribution F_u(x) = x^alpha, F_v(x) = x^beta on [0,1]^2.
// alpha (beta) < 1 skews mass toward low demands (values), > 1 toward high.
struct UserDistribution {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::domain_error("distribution: alpha must be > 0 and finite");
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw std::domain_error("distribution: beta must be > 0 and finite");
  }

  double cdf_u(double x) const { return std::pow(x, alpha); }
  double cdf_v(double x) const { return std::pow(x, beta); }
  double quantile_u(double s) const { return std::pow(s, 1.0 / alpha); }
  double mean_u() const { return alpha / (alpha + 1.0); }
};

// ---------------------------------------------------------------------------
// Pointwise model
// ---------------------------------------------------------------------------

/// Charge for consuming `usage` units: f + p*(y - g)^+.
/// Exactly f when usage <= cap; negative usage is a domain error.
inline double charge(double usage, const Tariff& t) {
  if (!(usage >= 0.0)) throw std::domain_error("charge: usage must be >= 0");
  const double over = usage - t.cap;  // -inf when cap unlimited
  return t.lump_sum + (over > 0.0 ? t.per_unit * over : 0.0);
}

/// Achievable demand rho(u, q) = u * exp(-q).  Equals u at q = 0 and 0 at
/// infinite congestion.
inline double achievable_demand(double u, double q) {
  if (!(u >= 0.0)) throw std::domain_error("achievable_demand: u must be >= 0");
  if (!(q >= 0.0)) throw std::domain_error("achievable_demand: q must be >= 0");
  if (std::isinf(q)) return 0.0;
  return u * std::exp(-q);
}

/// Usage choice given an already-computed achievable demand.
inline double usage_given_rho(double rho, double v, const Tariff& t) {
  if (rho > t.cap && v < t.per_unit) return t.cap;
  return rho;
}

/// Utility at the optimal usage given an already-computed achievable
/// demand: v*y - t(y).
inline double utility_given_rho(double rho, double v, const Tariff& t) {
  const double y = usage_given_rho(rho, v, t);
  return v * y - charge(y, t);
}

/// Utility-maximizing usage: rho - (rho - g)^+ * 1{v < p}.  A user stops
/// at the cap only when her achievable demand exceeds it and her value is
/// strictly below the per-unit fee; at v == p she consumes the full
/// achievable demand (the two choices tie in utility there).
inline double optimal_usage(const UserType& user, const Tariff& t, double q) {
  return usage_given_rho(achievable_demand(user.demand, q), user.value, t);
}

/// Utility at the optimal usage: v*y - t(y).  Piecewise linear in v with a
/// single kink at v = p; non-increasing in q, f, p and non-decreasing in g.
inline double optimal_utility(const UserType& user, const Tariff& t, double q) {
  return utility_given_rho(achievable_demand(user.demand, q), user.value, t);
}

/// Utility delivered by the zero-fee outside option at congestion q0:
/// v * rho(u, q0).  Identically zero when q0 is infinite (pure monopoly
/// with voluntary participation).
inline double free_utility(const UserType& user, double q0) {
  return user.value * achievable_demand(user.demand, q0);
}

// ---------------------------------------------------------------------------
// Congestion (capacity sharing)
// ---------------------------------------------------------------------------

/// Congestion induced by load d on capacity c: Q(d, c) = d / c.
inline double congestion(double load, double capacity) {
  if (!(capacity > 0.0)) throw std::domain_error("congestion: capacity must be > 0");
  if (!(load >= 0.0)) throw std::domain_error("congestion: load must be >= 0");
  return load / capacity;
}

/// Load implied by an observed congestion level: Q^-1(q, c) = q * c.
/// Round-trips with congestion() exactly; infinite q is rejected.
inline double inverse_congestion(double q, double capacity) {
  if (!(capacity > 0.0)) throw std::domain_error("inverse_congestion: capacity must be > 0");
  if (!(q >= 0.0) || std::isinf(q))
    throw std::domain_error("inverse_congestion: q must be finite and >= 0");
  return q * capacity;
}

}  // namespace nettariff
