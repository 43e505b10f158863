// nettariff — scenario-driven CLI: equilibria, cap sweeps, fee
// optimization, property verification and oracle comparison.  Emits CSV
// (or a text report for `verify`) with a trailing summary comment; output
// is byte-identical for identical config + seed.
//
// Exit codes: 0 ok, 1 config error, 2 non-convergence, 3 property failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nettariff/config.hpp"
#include "nettariff/csv.hpp"
#include "nettariff/demand_based.hpp"
#include "nettariff/equilibrium.hpp"
#include "nettariff/market.hpp"
#include "nettariff/optimize.hpp"
#include "nettariff/oracle.hpp"
#include "nettariff/verify.hpp"
#include "nettariff/version.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNoConvergence = 2;
constexpr int kPropertyFailure = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;  // empty => stdout
  std::uint64_t seed = 1;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "Scenario config file (JSON)")
      ->required();
  cmd->add_option("--out", args->out_path, "Output file (default: stdout)");
  cmd->add_option("--seed", args->seed, "Seed for randomized suites");
  cmd->add_option("--jobs", args->jobs, "Worker threads for row-level fan-out");
}

// Results are assembled in memory and only written once the command has
// finished, so failed runs leave no partial output file behind.
void write_output(const CommonArgs& args, const std::string& text) {
  if (args.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + args.out_path);
  out << text;
}

nettariff::MonopolyMarket monopoly_market(const nettariff::ScenarioConfig& cfg) {
  if (cfg.scenario.providers.size() != 1) {
    throw nettariff::ConfigError(
        "this command requires exactly one provider in the scenario");
  }
  return {cfg.scenario.providers[0].capacity, cfg.scenario.free_congestion,
          cfg.scenario.dist};
}

int cmd_equilibrium(const CommonArgs& args) {
  using namespace nettariff;
  const ScenarioConfig cfg = load_config(args.config_path);

  EquilibriumResult eq;
  if (cfg.scenario.providers.size() == 1) {
    eq = solve_monopoly(cfg.scenario.providers[0], cfg.scenario.free_congestion,
                        cfg.scenario.dist, cfg.solve);
  } else {
    eq = solve_oligopoly(cfg.scenario, cfg.solve);
  }
  const auto metrics = market_metrics(cfg.scenario, eq.q, cfg.solve.quad);

  std::ostringstream buf;
  CsvWriter csv(buf);
  csv.header({"id", "q", "d", "revenue", "welfare", "residual", "iterations"});
  for (std::size_t i = 0; i < cfg.scenario.providers.size(); ++i) {
    const double residual =
        std::abs(eq.q[i] - eq.d[i] / cfg.scenario.providers[i].capacity);
    csv.row({std::to_string(i), format_number(eq.q[i]), format_number(eq.d[i]),
             format_number(metrics.revenue[i]), format_number(metrics.welfare[i]),
             format_number(residual), std::to_string(eq.iterations)});
  }
  if (!eq.converged) csv.comment("equilibrium did not converge to tolerance");
  csv.summary(cfg.raw, args.seed);
  write_output(args, buf.str());
  return eq.converged ? kOk : kNoConvergence;
}

int cmd_sweep_cap(const CommonArgs& args) {
  using namespace nettariff;
  const ScenarioConfig cfg = load_config(args.config_path);
  const MonopolyMarket market = monopoly_market(cfg);

  const auto rows = sweep_cap(cfg.g_grid, market, cfg.search, args.jobs);

  std::ostringstream buf;
  CsvWriter csv(buf);
  csv.header({"g", "f_star", "p_star", "R_star", "S_at_Rstar", "f_circ",
              "p_circ", "S_circ"});
  bool all_ok = true;
  for (const auto& row : rows) {
    csv.row({format_cap(row.cap), format_number(row.f_star),
             format_number(row.p_star), format_number(row.r_star),
             format_number(row.s_at_rstar), format_number(row.f_circ),
             format_number(row.p_circ), format_number(row.s_circ)});
    if (!row.ok) {
      all_ok = false;
      csv.comment("row g=" + format_cap(row.cap) + " failed: " + row.error);
    }
  }

  // Observed-trend notes; violations are reported, never fatal.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].f_star + 1e-4 < rows[i - 1].f_star ||
        rows[i].p_star + 1e-4 < rows[i - 1].p_star) {
      csv.comment("observation: revenue-optimal fees dip between g=" +
                  format_cap(rows[i - 1].cap) + " and g=" + format_cap(rows[i].cap));
    }
  }
  for (const auto& row : rows) {
    if (row.f_circ > row.f_star + 1e-4 || row.p_circ > row.p_star + 1e-4) {
      csv.comment("observation: welfare-optimal fees above revenue-optimal at g=" +
                  format_cap(row.cap));
    }
  }
  csv.summary(cfg.raw, args.seed);
  write_output(args, buf.str());
  return all_ok ? kOk : kNoConvergence;
}

int cmd_optimize_fees(const CommonArgs& args, const std::string& cap_text,
                      const std::string& objective_text) {
  using namespace nettariff;
  const ScenarioConfig cfg = load_config(args.config_path);
  const MonopolyMarket market = monopoly_market(cfg);

  double cap = 0.0;
  if (cap_text == "unlimited") {
    cap = kUnlimited;
  } else {
    try {
      cap = std::stod(cap_text);
    } catch (...) {
      throw ConfigError("--cap: expected a number or \"unlimited\"");
    }
    if (!(cap >= 0.0)) throw ConfigError("--cap: must be >= 0");
  }
  Objective objective;
  if (objective_text == "revenue") objective = Objective::revenue;
  else if (objective_text == "welfare") objective = Objective::welfare;
  else throw ConfigError("--objective: expected \"revenue\" or \"welfare\"");

  const auto opt = optimize_fees(cap, market, objective, cfg.search);

  std::ostringstream buf;
  CsvWriter csv(buf);
  csv.header({"g", "objective_kind", "f_opt", "p_opt", "objective",
              "evaluations", "refine_depth", "solver_failures", "unique_basin"});
  csv.row({format_cap(opt.cap), to_string(opt.kind), format_number(opt.f_opt),
           format_number(opt.p_opt), format_number(opt.objective),
           std::to_string(opt.evaluations), std::to_string(opt.refine_depth),
           std::to_string(opt.solver_failures), opt.unique_basin ? "1" : "0"});
  csv.summary(cfg.raw, args.seed);
  write_output(args, buf.str());
  return opt.solver_failures == 0 ? kOk : kNoConvergence;
}

int cmd_verify(const CommonArgs& args, bool break_congestion) {
  using namespace nettariff;
  const ScenarioConfig cfg = load_config(args.config_path);

  VerifyOptions opts = cfg.verify;
  opts.seed = args.seed;
  opts.jobs = args.jobs;
  opts.break_congestion = break_congestion;

  std::ostringstream buf;
  const auto results = run_verification(opts, &buf);
  int hard_failures = 0;
  for (const auto& r : results) {
    if (r.hard && !r.passed) ++hard_failures;
  }
  buf << (hard_failures == 0 ? "all hard checks passed"
                             : std::to_string(hard_failures) + " hard check(s) failed")
      << "\n";
  CsvWriter(buf).summary(cfg.raw, args.seed);
  write_output(args, buf.str());
  return hard_failures == 0 ? kOk : kPropertyFailure;
}

int cmd_oracle_compare(const CommonArgs& args) {
  using namespace nettariff;
  const ScenarioConfig cfg = load_config(args.config_path);
  if (cfg.scenario.providers.size() != 1)
    throw ConfigError("oracle-compare requires exactly one provider");
  const auto& provider = cfg.scenario.providers[0];

  const auto eq = solve_monopoly(provider, cfg.scenario.free_congestion,
                                 cfg.scenario.dist, cfg.solve);
  const auto grid = build_grid(cfg.scenario.dist, cfg.oracle.n_u, cfg.oracle.n_v);
  const auto oracle_eq =
      oracle_equilibrium(grid, provider, cfg.scenario.free_congestion, cfg.solve);
  const auto qm = market_metrics(cfg.scenario, eq.q, cfg.solve.quad);
  const auto om = oracle_metrics(grid, cfg.scenario, eq.q);

  std::ostringstream buf;
  CsvWriter csv(buf);
  csv.header({"quantity", "quadrature", "oracle", "abs_delta"});
  auto emit = [&](const std::string& name, double a, double b) {
    csv.row({name, format_number(a), format_number(b),
             format_number(std::abs(a - b))});
  };
  emit("q_star", eq.q[0], oracle_eq.q[0]);
  emit("d_star", eq.d[0], oracle_eq.d[0]);
  emit("share", qm.share[0], om.share[0]);
  emit("load", qm.load[0], om.load[0]);
  emit("revenue", qm.revenue[0], om.revenue[0]);
  emit("welfare", qm.welfare[0], om.welfare[0]);
  csv.summary(cfg.raw, args.seed);
  write_output(args, buf.str());
  return (eq.converged && oracle_eq.converged) ? kOk : kNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Market equilibria and optimal two-part tariffs for "
               "congestion-prone network services"};
  app.set_version_flag("--version", nettariff::kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  std::string cap_text = "0";
  std::string objective_text = "revenue";
  bool break_congestion = false;

  auto* equilibrium = app.add_subcommand(
      "equilibrium", "Solve the congestion equilibrium of the scenario");
  add_common(equilibrium, &args);

  auto* sweep = app.add_subcommand(
      "sweep-cap", "Optimize fees per data cap across the sweep grid");
  add_common(sweep, &args);

  auto* optimize = app.add_subcommand(
      "optimize-fees", "Optimize (f, p) at a fixed data cap");
  add_common(optimize, &args);
  optimize->add_option("--cap", cap_text, "Data cap (number or \"unlimited\")");
  optimize->add_option("--objective", objective_text, "revenue | welfare");

  auto* verify = app.add_subcommand(
      "verify", "Run the randomized property suites");
  add_common(verify, &args);
  verify
      ->add_flag("--selftest-break-congestion", break_congestion,
                 "Self-test: break the congestion map so the equilibrium "
                 "check must fail")
      ->group("");  // hidden

  auto* oracle = app.add_subcommand(
      "oracle-compare", "Compare quadrature metrics against the agent grid");
  add_common(oracle, &args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (app.got_subcommand(equilibrium)) return cmd_equilibrium(args);
    if (app.got_subcommand(sweep)) return cmd_sweep_cap(args);
    if (app.got_subcommand(optimize))
      return cmd_optimize_fees(args, cap_text, objective_text);
    if (app.got_subcommand(verify)) return cmd_verify(args, break_congestion);
    if (app.got_subcommand(oracle)) return cmd_oracle_compare(args);
  } catch (const nettariff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  }
  return kConfigError;
}
