#pragma once

// nettariff/verify.hpp — randomized property suites for the model's
// structural claims: equilibrium existence and residuals, congestion
// monotonicity, revenue/welfare brackets across the cap sweep,
// normalization invariance, pay-as-you-go equivalence and dominance, and
// constant-price optimality.  Hard checks gate the verify command's exit
// code; soft checks record observed fee trends and are reported but
// never fatal.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nettariff/demand_based.hpp"
#include "nettariff/equilibrium.hpp"
#include "nettariff/market.hpp"
#include "nettariff/model.hpp"
#include "nettariff/optimize.hpp"
#include "nettariff/oracle.hpp"

namespace nettariff {

// Deterministic uniform draws independent of the standard library's
// distribution implementations (identical sequences on every platform).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double next01() { return (gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next01(); }
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next01() * (hi - lo + 1));
  }
  bool bernoulli(double p) { return next01() < p; }

 private:
  std::mt19937_64 gen_;
};

struct CheckResult {
  std::string name;
  bool hard = true;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int equilibrium_cases = 200;    // randomized existence/residual scenarios
  int monotonicity_pairs = 100;   // single-coordinate monotonicity pairs
  int invariance_cases = 50;      // normalization transforms
  int equivalence_cases = 100;    // per-u pay-as-you-go constructions
  int dominance_cases = 20;       // full-market dominance runs
  std::vector<double> bracket_caps{0.0, 0.25, 0.5, 0.75, 1.0, kUnlimited};
  SearchConfig search;   // callers may coarsen for quick runs
  SolveOptions solve;
  int jobs = 1;
  // Self-test switch: recompute fixed-point residuals with the congestion
  // map replaced by Q(d, c) = d.  The equilibrium check must then fail;
  // exercised by the verify command's mutation test.
  bool break_congestion = false;
};

namespace verify_detail {

inline Tariff draw_tariff(Rng& rng) {
  Tariff t;
  t.cap = rng.bernoulli(0.25) ? kUnlimited : rng.uniform(0.0, 1.1);
  t.lump_sum = rng.uniform(0.01, 0.8);
  t.per_unit = rng.uniform(0.01, 1.2);
  return t;
}

inline UserDistribution draw_distribution(Rng& rng) {
  return {rng.uniform(0.4, 2.5), rng.uniform(0.4, 2.5)};
}

inline double draw_q0(Rng& rng) {
  return rng.bernoulli(0.25) ? kInfiniteCongestion : rng.uniform(0.3, 3.0);
}

inline std::string describe(const Tariff& t, double c, double q0,
                            const UserDistribution& dist) {
  std::ostringstream os;
  os << "g=" << t.cap << " f=" << t.lump_sum << " p=" << t.per_unit
     << " c=" << c << " q0=" << q0 << " alpha=" << dist.alpha
     << " beta=" << dist.beta;
  return os.str();
}

}  // namespace verify_detail

/// Randomized monopoly scenarios all converge, the
/// fixed-point residual holds under independent recomputation, and the
/// provider stays strictly less congested than the free option whenever
/// it carries load.
inline CheckResult check_equilibrium_existence(const VerifyOptions& opts) {
  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  CheckResult result{"equilibrium-existence", true, true, ""};
  int done = 0;
  for (int i = 0; i < opts.equilibrium_cases; ++i) {
    const Tariff t = verify_detail::draw_tariff(rng);
    const double c = rng.uniform(0.15, 2.0);
    const double q0 = verify_detail::draw_q0(rng);
    const UserDistribution dist = verify_detail::draw_distribution(rng);

    ProviderConfig provider{t, c};
    auto eq = solve_monopoly(provider, q0, dist, opts.solve);

    // Independent residual recomputation (optionally with the congestion
    // map broken for the mutation self-test).
    MarketScenario sc{{provider}, q0, dist};
    const double d = market_metrics(sc, eq.q, opts.solve.quad).load[0];
    const double implied = opts.break_congestion ? d : d / c;
    const double residual = std::abs(eq.q[0] - implied);

    std::string failure;
    if (!eq.converged) failure = "solver reported non-convergence";
    else if (residual > 2.0 * opts.solve.tol)
      failure = "fixed-point residual " + std::to_string(residual);
    else if (std::isfinite(q0) && eq.d[0] > 1e-12 && !(eq.q[0] < q0))
      failure = "q* not below q0 with positive load";
    if (!failure.empty()) {
      result.passed = false;
      result.detail = failure + " at " + verify_detail::describe(t, c, q0, dist);
      return result;
    }
    ++done;
  }
  result.detail = std::to_string(done) + " scenarios converged, residual <= tol";
  return result;
}

/// Across single-coordinate parameter changes the
/// monopoly congestion moves the right way (down in f, p, c; up in g, q0).
inline CheckResult check_equilibrium_monotonicity(const VerifyOptions& opts) {
  Rng rng(opts.seed ^ 0xbf58476d1ce4e5b9ull);
  CheckResult result{"equilibrium-monotonicity", true, true, ""};
  const double slack = 2.0 * opts.solve.tol;
  const char* coords[] = {"f", "p", "c", "g", "q0"};
  for (int i = 0; i < opts.monotonicity_pairs; ++i) {
    Tariff t = verify_detail::draw_tariff(rng);
    t.cap = rng.uniform(0.0, 1.0);  // finite so the cap coordinate can move
    double c = rng.uniform(0.15, 2.0);
    double q0 = rng.uniform(0.4, 3.0);
    const UserDistribution dist = verify_detail::draw_distribution(rng);

    const int coord = rng.uniform_int(0, 4);
    Tariff t2 = t;
    double c2 = c, q02 = q0;
    bool expect_decrease = true;  // q* direction for an increased coordinate
    switch (coord) {
      case 0: t2.lump_sum += rng.uniform(0.02, 0.5); break;
      case 1: t2.per_unit += rng.uniform(0.02, 0.5); break;
      case 2: c2 += rng.uniform(0.05, 1.0); break;
      case 3: t2.cap += rng.uniform(0.05, 0.5); expect_decrease = false; break;
      case 4: q02 += rng.uniform(0.1, 1.0); expect_decrease = false; break;
    }

    auto eq1 = solve_monopoly({t, c}, q0, dist, opts.solve);
    auto eq2 = solve_monopoly({t2, c2}, q02, dist, opts.solve);
    const double dq = eq2.q[0] - eq1.q[0];
    const bool ok = expect_decrease ? dq <= slack : dq >= -slack;
    if (!eq1.converged || !eq2.converged || !ok) {
      result.passed = false;
      std::ostringstream os;
      os << "coordinate " << coords[coord] << " moved q* by " << dq << " at "
         << verify_detail::describe(t, c, q0, dist);
      result.detail = os.str();
      return result;
    }
  }
  result.detail = std::to_string(opts.monotonicity_pairs) + " pairs monotone";
  return result;
}

/// Normalization invariance: the round-tripped parameter transform leaves
/// the continuous equilibrium (q*, d*) unchanged; on the agent grid the
/// transform commutes with the equilibrium's congestion, and loads at a
/// fixed congestion level scale exactly by k/U.  (The grid's own
/// equilibrium load is excluded: the discrete fixed point sits exactly on
/// a participation threshold, where one boundary agent's rounding decides
/// a whole weight cell.)
inline CheckResult check_scale_invariance(const VerifyOptions& opts) {
  Rng rng(opts.seed ^ 0x94d049bb133111ebull);
  CheckResult result{"normalization-invariance", true, true, ""};
  for (int i = 0; i < opts.invariance_cases; ++i) {
    const Tariff t = verify_detail::draw_tariff(rng);
    const double c = rng.uniform(0.2, 2.0);
    const double q0 = verify_detail::draw_q0(rng);
    const UserDistribution dist = verify_detail::draw_distribution(rng);
    const ScaleTransform tr{rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0),
                            rng.uniform(0.5, 3.0)};

    auto base = solve_monopoly({t, c}, q0, dist, opts.solve);
    const Tariff round_tripped = normalize_tariff(denormalize_tariff(t, tr), tr);
    const double c_rt = normalize_capacity(denormalize_capacity(c, tr), tr);
    auto again = solve_monopoly({round_tripped, c_rt}, q0, dist, opts.solve);

    const AgentGrid grid = build_grid(dist, 80, 80);
    const AgentGrid scaled = denormalize_grid(grid, tr);
    const Tariff t_s = denormalize_tariff(t, tr);
    const double c_s = denormalize_capacity(c, tr);
    auto eq_n = oracle_equilibrium(grid, {t, c}, q0, opts.solve);
    auto eq_s = oracle_equilibrium(scaled, {t_s, c_s}, q0, opts.solve);

    const double dq_ct = std::abs(base.q[0] - again.q[0]);
    const double dd_ct = std::abs(base.d[0] - again.d[0]);
    const double dq_or = std::abs(eq_n.q[0] - eq_s.q[0]);

    // load scaling at generic congestion levels
    double dload = 0.0;
    MarketScenario sc_n{{{t, c}}, q0, dist};
    MarketScenario sc_s{{{t_s, c_s}}, q0, dist};
    for (int s = 0; s < 2; ++s) {
      const double q[1] = {rng.uniform(0.0, std::isinf(q0) ? 2.0 : q0)};
      const auto m_n = oracle_metrics(grid, sc_n, q);
      const auto m_s = oracle_metrics(scaled, sc_s, q);
      dload = std::max(dload, std::abs(m_n.load[0] - m_s.load[0] * tr.k / tr.U));
    }

    if (dq_ct > 1e-9 || dd_ct > 1e-9 || dq_or > 1e-9 || dload > 1e-9) {
      result.passed = false;
      std::ostringstream os;
      os << "dq_continuous=" << dq_ct << " dd_continuous=" << dd_ct
         << " dq_grid=" << dq_or << " dload=" << dload << " at k=" << tr.k
         << " U=" << tr.U << " V=" << tr.V << ", "
         << verify_detail::describe(t, c, q0, dist);
      result.detail = os.str();
      return result;
    }
  }
  result.detail = std::to_string(opts.invariance_cases) + " transforms invariant";
  return result;
}

/// Per-demand pay-as-you-go construction: the charge-preserving case must
/// match revenue and load exactly; the revenue-matched case must match
/// revenue to 1e-8 and never add load.
inline CheckResult check_payg_equivalence(const VerifyOptions& opts) {
  Rng rng(opts.seed ^ 0xd6e8feb86659fd93ull);
  CheckResult result{"payg-equivalence", true, true, ""};
  int case1 = 0, case2 = 0;
  for (int i = 0; i < opts.equivalence_cases; ++i) {
    const UserDistribution dist = verify_detail::draw_distribution(rng);
    const double u = rng.uniform(0.05, 1.0);
    const double q_i = rng.uniform(0.05, 2.0);
    const double q0 = rng.bernoulli(0.3) ? kInfiniteCongestion
                                         : q_i + rng.uniform(0.05, 2.0);
    Tariff t;
    const double rho_i = achievable_demand(u, q_i);
    const double rho_0 = achievable_demand(u, q0);
    if (rng.bernoulli(0.5)) {
      // Biased toward the revenue-matched case: cap below the achievable
      // demand, lump sum below the fee threshold.
      t.per_unit = rng.uniform(0.2, 1.1);
      t.cap = rng.uniform(rho_0, rho_i);
      t.lump_sum = rng.uniform(0.0, 0.95) * std::max(0.0, t.per_unit * (t.cap - rho_0));
    } else {
      t = verify_detail::draw_tariff(rng);
    }

    const auto report = payg_equivalence_report(u, t, q_i, q0, dist);
    const double rev_gap = std::abs(report.revenue_payg - report.revenue_original);
    const double load_gap = report.load_payg - report.load_original;
    std::string failure;
    if (report.tag == PaygCase::charge_preserving) {
      ++case1;
      if (rev_gap > 1e-12) failure = "case-1 revenue gap " + std::to_string(rev_gap);
      if (std::abs(load_gap) > 1e-12)
        failure = "case-1 load gap " + std::to_string(load_gap);
    } else {
      ++case2;
      if (rev_gap > 1e-8) failure = "case-2 revenue gap " + std::to_string(rev_gap);
      if (load_gap > 1e-12)
        failure = "case-2 load increase " + std::to_string(load_gap);
    }
    if (!failure.empty()) {
      result.passed = false;
      result.detail = failure + " at u=" + std::to_string(u) + " qI=" +
                      std::to_string(q_i) + " " +
                      verify_detail::describe(t, 1.0, q0, dist);
      return result;
    }
  }
  if (case1 < 5 || case2 < 5) {
    result.passed = false;
    result.detail = "case coverage too thin: case-1 " + std::to_string(case1) +
                    ", case-2 " + std::to_string(case2);
    return result;
  }
  std::ostringstream os;
  os << case1 << " charge-preserving + " << case2 << " revenue-matched instances";
  result.detail = os.str();
  return result;
}

/// Full-market dominance: under the constructed pay-as-you-go profile the
/// equilibrium congests no more and earns no less than the original
/// banded tariff.
inline CheckResult check_payg_dominance(const VerifyOptions& opts) {
  Rng rng(opts.seed ^ 0x2545f4914f6cdd1dull);
  CheckResult result{"payg-dominance", true, true, ""};
  for (int i = 0; i < opts.dominance_cases; ++i) {
    const UserDistribution dist = verify_detail::draw_distribution(rng);
    const double capacity = rng.uniform(0.2, 1.5);
    const double q0 = rng.bernoulli(0.3) ? kInfiniteCongestion : rng.uniform(0.5, 3.0);
    const int n_bands = rng.uniform_int(1, 4);
    DemandBasedTariff tariff;
    for (int b = 0; b < n_bands; ++b) {
      tariff.bands.push_back({double(b) / n_bands, double(b + 1) / n_bands,
                              verify_detail::draw_tariff(rng)});
    }

    const auto report = verify_payg_dominance(tariff, capacity, q0, dist, opts.solve);
    std::string failure;
    if (!report.original.converged || !report.payg.converged)
      failure = "equilibrium did not converge";
    else if (report.payg.q[0] > report.original.q[0] + 10 * opts.solve.tol)
      failure = "payg congestion above original by " +
                std::to_string(report.payg.q[0] - report.original.q[0]);
    else if (report.revenue_payg < report.revenue_original - 1e-6)
      failure = "payg revenue below original by " +
                std::to_string(report.revenue_original - report.revenue_payg);
    if (!failure.empty()) {
      result.passed = false;
      std::ostringstream os;
      os << failure << " (bands=" << n_bands << " c=" << capacity << " q0=" << q0
         << " alpha=" << dist.alpha << " beta=" << dist.beta << ")";
      result.detail = os.str();
      return result;
    }
  }
  result.detail = std::to_string(opts.dominance_cases) + " tariffs dominated";
  return result;
}

/// Constant-price optimality probe at the zero-cap revenue optimum, plus
/// a power check that the same probe detects a deliberately bad price.
inline CheckResult check_constant_price_probe(const VerifyOptions& opts) {
  CheckResult result{"constant-price-optimality", true, true, ""};
  const MonopolyMarket market{1.0, 1.0, {1.0, 1.0}};
  const auto opt = optimize_fees(0.0, market, Objective::revenue, opts.search);
  const auto probe = check_constant_price_optimality(opt.p_opt, market.capacity,
                                                     market.free_congestion,
                                                     market.dist, 4, 0.02,
                                                     opts.solve);
  const auto power = check_constant_price_optimality(0.5 * opt.p_opt,
                                                     market.capacity,
                                                     market.free_congestion,
                                                     market.dist, 4, 0.02,
                                                     opts.solve);
  std::ostringstream os;
  os << "gain at optimum " << probe.max_gain << ", gain at p*/2 "
     << power.max_gain;
  result.detail = os.str();
  if (probe.max_gain > 1e-4 || !(power.max_gain > 1e-6)) result.passed = false;
  return result;
}

/// Revenue bracket across the cap sweep (hard), plus the observed fee
/// observations (soft).
inline std::vector<CheckResult> check_cap_sweeps(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  const double slack = std::max(1e-4, 10.0 * opts.search.refine_tol);

  const MonopolyMarket revenue_market{1.0, 1.0, {1.0, 1.0}};
  auto rev_rows = sweep_cap(opts.bracket_caps, revenue_market, opts.search, opts.jobs);
  {
    CheckResult r{"revenue-bracket", true, true, ""};
    const double r0 = rev_rows.front().r_star;
    const double rinf = rev_rows.back().r_star;
    for (const auto& row : rev_rows) {
      if (!row.ok) { r.passed = false; r.detail = "row failed: " + row.error; break; }
      if (row.r_star > r0 + slack || row.r_star < rinf - slack) {
        r.passed = false;
        std::ostringstream os;
        os << "R*(g=" << row.cap << ")=" << row.r_star << " outside [R*inf="
           << rinf << ", R*(0)=" << r0 << "]";
        r.detail = os.str();
        break;
      }
    }
    if (r.passed && !(rev_rows.front().f_star <= 1e-3)) {
      r.passed = false;
      r.detail = "f*(0)=" + std::to_string(rev_rows.front().f_star);
    }
    if (r.passed) {
      std::ostringstream os;
      os << "R*(0)=" << r0 << " >= R*(g) >= R*(unlimited)=" << rinf;
      r.detail = os.str();
    }
    out.push_back(r);
  }

  const MonopolyMarket welfare_market{0.3, kInfiniteCongestion, {1.0, 1.0}};
  auto wel_rows = sweep_cap(opts.bracket_caps, welfare_market, opts.search, opts.jobs);
  {
    CheckResult r{"welfare-bracket", true, true, ""};
    const double s0 = wel_rows.front().s_circ;
    const double sinf = wel_rows.back().s_circ;
    for (const auto& row : wel_rows) {
      if (!row.ok) { r.passed = false; r.detail = "row failed: " + row.error; break; }
      if (row.s_circ > s0 + slack || row.s_circ < sinf - slack) {
        r.passed = false;
        std::ostringstream os;
        os << "S(g=" << row.cap << ")=" << row.s_circ << " outside [S_inf="
           << sinf << ", S(0)=" << s0 << "]";
        r.detail = os.str();
        break;
      }
    }
    if (r.passed && !(wel_rows.front().f_circ <= 1e-3)) {
      r.passed = false;
      r.detail = "f(0)=" + std::to_string(wel_rows.front().f_circ);
    }
    if (r.passed) {
      std::ostringstream os;
      os << "S(0)=" << s0 << " >= S(g) >= S(unlimited)=" << sinf;
      r.detail = os.str();
    }
    out.push_back(r);
  }

  // Soft observations: optimal fees trend upward with the cap, and the
  // welfare-optimal fees sit below the revenue-optimal ones.
  {
    CheckResult r{"fees-increase-with-cap (observation)", false, true, ""};
    for (std::size_t i = 1; i < rev_rows.size(); ++i) {
      if (rev_rows[i].f_star < rev_rows[i - 1].f_star - slack ||
          rev_rows[i].p_star < rev_rows[i - 1].p_star - slack) {
        r.passed = false;
        std::ostringstream os;
        os << "fee dip between g=" << rev_rows[i - 1].cap << " and g="
           << rev_rows[i].cap;
        r.detail = os.str();
        break;
      }
    }
    if (r.passed) r.detail = "f* and p* non-decreasing across the sweep";
    out.push_back(r);
  }
  {
    CheckResult r{"welfare-fees-below-revenue-fees (observation)", false, true, ""};
    for (const auto& row : wel_rows) {
      if (row.f_circ > row.f_star + slack || row.p_circ > row.p_star + slack) {
        r.passed = false;
        std::ostringstream os;
        os << "welfare-optimal fees above revenue-optimal at g=" << row.cap;
        r.detail = os.str();
        break;
      }
    }
    if (r.passed) r.detail = "f and p of the welfare optimum never exceed the revenue optimum";
    out.push_back(r);
  }
  return out;
}

/// Run every suite.  If `log` is given, one line per check is streamed as
/// results arrive.
inline std::vector<CheckResult> run_verification(const VerifyOptions& opts,
                                                 std::ostream* log = nullptr) {
  std::vector<CheckResult> results;
  auto emit = [&](const CheckResult& r) {
    results.push_back(r);
    if (log) {
      *log << (r.passed ? "[PASS]" : "[FAIL]") << (r.hard ? " " : " (soft) ")
           << r.name << ": " << r.detail << "\n";
    }
  };
  // An exception inside one suite becomes that suite's failure instead of
  // aborting the whole run.
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      emit(fn(opts));
    } catch (const std::exception& e) {
      emit({name, true, false, std::string("exception: ") + e.what()});
    }
  };
  guarded("equilibrium-existence", check_equilibrium_existence);
  guarded("equilibrium-monotonicity", check_equilibrium_monotonicity);
  try {
    for (const auto& r : check_cap_sweeps(opts)) emit(r);
  } catch (const std::exception& e) {
    emit({"cap-sweeps", true, false, std::string("exception: ") + e.what()});
  }
  guarded("normalization-invariance", check_scale_invariance);
  guarded("payg-equivalence", check_payg_equivalence);
  guarded("payg-dominance", check_payg_dominance);
  guarded("constant-price-optimality", check_constant_price_probe);
  return results;
}

inline bool all_hard_checks_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (r.hard && !r.passed) return false;
  }
  return true;
}

}  // namespace nettariff
