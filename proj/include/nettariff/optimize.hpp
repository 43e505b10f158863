#pragma once

// nettariff/optimize.hpp — revenue- and welfare-optimal fees at a fixed
// data cap, and the cap sweep behind the revenue/welfare curves.
//
// The objective R(g, f, p) (or S) is an equilibrium-evaluated quantity
// with no known concavity, so the search is a multi-start heuristic: a
// coarse grid over the fee box followed by compass-pattern refinement
// from the best cells.  Every result carries its probe log; when several
// refined candidates tie within tolerance, the one with lexicographically
// lowest (f, p) is reported and all candidates are kept.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nettariff/equilibrium.hpp"
#include "nettariff/market.hpp"
#include "nettariff/model.hpp"
#include "nettariff/parallel.hpp"

namespace nettariff {

enum class Objective { revenue, welfare };

inline const char* to_string(Objective o) {
  return o == Objective::revenue ? "revenue" : "welfare";
}

// Monopoly market with the tariff left open: the quantities the fee
// search cannot change.
struct MonopolyMarket {
  double capacity = 1.0;
  double free_congestion = kInfiniteCongestion;
  UserDistribution dist;
};

struct SearchConfig {
  int grid_f = 21;
  int grid_p = 21;
  double f_max = 1.0;  // v*y <= 1 after normalization bounds useful fees
  double p_max = 1.0;
  int refine_starts = 5;
  double refine_tol = 1e-5;  // step size floor in fee space
  SolveOptions solve;
};

struct FeeProbe {
  double f = 0.0, p = 0.0;
  double objective = 0.0;
};

struct FeeOptimum {
  double cap = 0.0;
  double f_opt = 0.0, p_opt = 0.0;
  double objective = 0.0;  // equilibrium-evaluated metric at the optimum
  Objective kind = Objective::revenue;
  long evaluations = 0;
  int refine_depth = 0;  // step halvings in the deepest refinement
  int solver_failures = 0;
  bool unique_basin = true;
  std::vector<FeeProbe> basins;  // refined candidates within tie tolerance
  std::vector<FeeProbe> probes;  // every distinct (f, p) evaluated
};

namespace detail {

struct FeeEvaluation {
  double revenue = 0.0;
  double welfare = 0.0;
  bool converged = true;
};

inline double pick(const FeeEvaluation& e, Objective o) {
  return o == Objective::revenue ? e.revenue : e.welfare;
}

// Equilibrium evaluation of both objectives at one fee pair, memoized per
// search (the pattern probes revisit grid points frequently).
class FeeEvaluator {
 public:
  FeeEvaluator(double cap, const MonopolyMarket& market, const SolveOptions& solve)
      : cap_(cap), market_(market), solve_(solve) {}

  const FeeEvaluation& operator()(double f, double p) {
    auto key = std::make_pair(f, p);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    ProviderConfig provider{{cap_, f, p}, market_.capacity};
    auto eq = solve_monopoly(provider, market_.free_congestion, market_.dist, solve_);
    MarketScenario scenario{{provider}, market_.free_congestion, market_.dist};
    auto m = market_metrics(scenario, eq.q, solve_.quad);
    FeeEvaluation eval{m.revenue[0], m.welfare[0], eq.converged};
    ++evaluations_;
    if (!eq.converged) ++failures_;
    return cache_.emplace(key, eval).first->second;
  }

  long evaluations() const { return evaluations_; }
  int failures() const { return failures_; }

  // Every distinct probe, in deterministic (f, p) key order.
  std::vector<FeeProbe> probes(Objective o) const {
    std::vector<FeeProbe> out;
    out.reserve(cache_.size());
    for (const auto& [key, eval] : cache_)
      out.push_back({key.first, key.second, pick(eval, o)});
    return out;
  }

 private:
  double cap_;
  MonopolyMarket market_;
  SolveOptions solve_;
  std::map<std::pair<double, double>, FeeEvaluation> cache_;
  long evaluations_ = 0;
  int failures_ = 0;
};

}  // namespace detail

/// Best (f, p) for one objective at fixed cap: coarse grid, then compass
/// refinement from the best refine_starts cells down to refine_tol steps.
inline FeeOptimum optimize_fees(double cap, const MonopolyMarket& market,
                                Objective objective,
                                const SearchConfig& config = {}) {
  market.dist.validate();
  if (config.grid_f < 2 || config.grid_p < 2)
    throw std::domain_error("optimize_fees: fee grids need at least 2 points");

  detail::FeeEvaluator evaluate(cap, market, config.solve);
  FeeOptimum result;
  result.cap = cap;
  result.kind = objective;

  const double step_f0 = config.f_max / (config.grid_f - 1);
  const double step_p0 = config.p_max / (config.grid_p - 1);

  std::vector<FeeProbe> grid;
  grid.reserve(config.grid_f * config.grid_p);
  for (int i = 0; i < config.grid_f; ++i) {
    for (int j = 0; j < config.grid_p; ++j) {
      const double f = i * step_f0;
      const double p = j * step_p0;
      grid.push_back({f, p, detail::pick(evaluate(f, p), objective)});
    }
  }
  std::sort(grid.begin(), grid.end(), [](const FeeProbe& a, const FeeProbe& b) {
    if (a.objective != b.objective) return a.objective > b.objective;
    if (a.f != b.f) return a.f < b.f;
    return a.p < b.p;
  });

  const int starts = std::min<int>(config.refine_starts, grid.size());
  std::vector<FeeProbe> refined;
  for (int s = 0; s < starts; ++s) {
    double f = grid[s].f, p = grid[s].p;
    double best = grid[s].objective;
    double step_f = step_f0, step_p = step_p0;
    int depth = 0;
    while (std::max(step_f, step_p) > config.refine_tol) {
      double cand_f = f, cand_p = p, cand = best;
      const double moves[4][2] = {{step_f, 0.0}, {-step_f, 0.0},
                                  {0.0, step_p}, {0.0, -step_p}};
      for (const auto& mv : moves) {
        const double nf = std::clamp(f + mv[0], 0.0, config.f_max);
        const double np = std::clamp(p + mv[1], 0.0, config.p_max);
        const double val = detail::pick(evaluate(nf, np), objective);
        if (val > cand) {
          cand = val;
          cand_f = nf;
          cand_p = np;
        }
      }
      if (cand > best) {
        best = cand;
        f = cand_f;
        p = cand_p;
      } else {
        step_f *= 0.5;
        step_p *= 0.5;
        ++depth;
      }
    }
    refined.push_back({f, p, best});
    result.refine_depth = std::max(result.refine_depth, depth);
  }

  // Winner: highest objective; candidates within the tie tolerance are
  // reported as basins and the lexicographically lowest (f, p) wins.
  const double tie_tol = 1e-7;
  double best_obj = refined.front().objective;
  for (const auto& r : refined) best_obj = std::max(best_obj, r.objective);

  const FeeProbe* winner = nullptr;
  for (const auto& r : refined) {
    if (r.objective < best_obj - tie_tol) continue;
    result.basins.push_back(r);
    if (winner == nullptr || r.f < winner->f ||
        (r.f == winner->f && r.p < winner->p)) {
      winner = &r;
    }
  }
  for (const auto& a : result.basins) {
    if (std::abs(a.f - winner->f) + std::abs(a.p - winner->p) >
        100.0 * config.refine_tol) {
      result.unique_basin = false;
    }
  }

  result.f_opt = winner->f;
  result.p_opt = winner->p;
  result.objective = detail::pick(evaluate(winner->f, winner->p), objective);
  result.evaluations = evaluate.evaluations();
  result.solver_failures = evaluate.failures();
  result.probes = evaluate.probes(objective);
  return result;
}

/// One row of the cap sweep: both objectives optimized at the same cap,
/// plus the welfare delivered by the revenue-optimal fees.
struct CapSweepRow {
  double cap = 0.0;
  double f_star = 0.0, p_star = 0.0, r_star = 0.0;  // revenue optimum
  double s_at_rstar = 0.0;                          // welfare at that optimum
  double f_circ = 0.0, p_circ = 0.0, s_circ = 0.0;  // welfare optimum
  bool ok = true;
  std::string error;
};

/// Sweep the cap grid; rows are independent and computed (optionally in
/// parallel) in deterministic grid order.  A failing row is recorded and
/// the sweep continues.
inline std::vector<CapSweepRow> sweep_cap(const std::vector<double>& caps,
                                          const MonopolyMarket& market,
                                          const SearchConfig& config = {},
                                          int jobs = 1) {
  std::vector<CapSweepRow> rows(caps.size());
  parallel_for(jobs, caps.size(), [&](std::size_t i) {
    CapSweepRow& row = rows[i];
    row.cap = caps[i];
    try {
      auto rev = optimize_fees(caps[i], market, Objective::revenue, config);
      row.f_star = rev.f_opt;
      row.p_star = rev.p_opt;
      row.r_star = rev.objective;

      detail::FeeEvaluator evaluate(caps[i], market, config.solve);
      row.s_at_rstar = evaluate(rev.f_opt, rev.p_opt).welfare;

      auto wel = optimize_fees(caps[i], market, Objective::welfare, config);
      row.f_circ = wel.f_opt;
      row.p_circ = wel.p_opt;
      row.s_circ = wel.objective;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  return rows;
}

}  // namespace nettariff
