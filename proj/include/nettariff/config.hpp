#pragma once

// nettariff/config.hpp — scenario configuration files.
//
// One JSON document describes a scenario and the knobs of every command:
//
//   {
//     "providers": [
//       {"cap": 0.4, "lump_sum": 0.1, "per_unit": 0.6, "capacity": 0.5}
//     ],
//     "free_congestion": 1.5,            // number or "inf"
//     "distribution": {"alpha": 1.0, "beta": 1.0},
//     "solver":  {"tolerance": 1e-9, "max_iters": 500, "damping": 0.5},
//     "sweep":   {"g_grid": [0, 0.1, "unlimited"]},
//     "search":  {"grid_f": 21, "grid_p": 21, "refine_tol": 1e-5, "starts": 5},
//     "oracle":  {"n_u": 2000, "n_v": 2000},
//     "verify":  {"equilibrium_cases": 200, ...}
//   }
//
// "cap" accepts a number or "unlimited".  Unknown keys are rejected;
// parse errors carry the line and column of the offending byte.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nettariff/equilibrium.hpp"
#include "nettariff/market.hpp"
#include "nettariff/model.hpp"
#include "nettariff/optimize.hpp"
#include "nettariff/verify.hpp"

namespace nettariff {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleConfig {
  int n_u = 2000;
  int n_v = 2000;
};

struct ScenarioConfig {
  MarketScenario scenario;
  SolveOptions solve;
  std::vector<double> g_grid;  // sweep grid; kUnlimited allowed
  SearchConfig search;
  OracleConfig oracle;
  VerifyOptions verify;
  std::string raw;  // config file bytes (hashed into output summaries)
};

namespace config_detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) { known = true; break; }
    }
    if (!known) throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
  }
}

inline double require_number(const json& obj, const std::string& where,
                             const char* key) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline double number_or(const json& obj, const std::string& where, const char* key,
                        double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline int int_or(const json& obj, const std::string& where, const char* key,
                  int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

// Numbers with a named sentinel ("unlimited" for caps, "inf" for the free
// provider's congestion).
inline double number_or_sentinel(const json& v, const std::string& where,
                                 const char* sentinel) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == sentinel)
    return std::numeric_limits<double>::infinity();
  throw ConfigError(where + ": expected a number or \"" + sentinel + "\"");
}

inline std::vector<double> default_g_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i * 0.05);
  grid.push_back(kUnlimited);
  return grid;
}

}  // namespace config_detail

/// Parse and validate a scenario configuration from raw JSON bytes.
/// Throws ConfigError with a line-anchored message on parse failures and
/// a path-anchored message on schema/validation failures.
inline ScenarioConfig parse_config(const std::string& text,
                                   const std::string& filename = "config") {
  using nlohmann::json;
  namespace cd = config_detail;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    std::ostringstream os;
    os << filename << ":" << line << ":" << col << ": " << e.what();
    throw ConfigError(os.str());
  }
  if (!root.is_object()) throw ConfigError(filename + ": top level must be an object");

  cd::reject_unknown_keys(root, filename,
                          {"providers", "free_congestion", "distribution",
                           "solver", "sweep", "search", "oracle", "verify"});

  ScenarioConfig cfg;
  cfg.raw = text;

  if (!root.contains("providers") || !root.at("providers").is_array() ||
      root.at("providers").empty()) {
    throw ConfigError(filename + ": \"providers\" must be a non-empty array");
  }
  int index = 0;
  for (const auto& pj : root.at("providers")) {
    const std::string where = "providers[" + std::to_string(index++) + "]";
    if (!pj.is_object()) throw ConfigError(where + ": expected an object");
    cd::reject_unknown_keys(pj, where, {"cap", "lump_sum", "per_unit", "capacity"});
    ProviderConfig p;
    if (!pj.contains("cap")) throw ConfigError(where + ": missing key \"cap\"");
    p.tariff.cap = cd::number_or_sentinel(pj.at("cap"), where + ".cap", "unlimited");
    p.tariff.lump_sum = cd::require_number(pj, where, "lump_sum");
    p.tariff.per_unit = cd::require_number(pj, where, "per_unit");
    p.capacity = cd::require_number(pj, where, "capacity");
    cfg.scenario.providers.push_back(p);
  }

  if (!root.contains("free_congestion"))
    throw ConfigError(filename + ": missing key \"free_congestion\"");
  cfg.scenario.free_congestion = cd::number_or_sentinel(
      root.at("free_congestion"), "free_congestion", "inf");

  if (root.contains("distribution")) {
    const auto& dj = root.at("distribution");
    cd::reject_unknown_keys(dj, "distribution", {"alpha", "beta"});
    cfg.scenario.dist.alpha = cd::number_or(dj, "distribution", "alpha", 1.0);
    cfg.scenario.dist.beta = cd::number_or(dj, "distribution", "beta", 1.0);
  }

  if (root.contains("solver")) {
    const auto& sj = root.at("solver");
    cd::reject_unknown_keys(sj, "solver", {"tolerance", "max_iters", "damping"});
    cfg.solve.tol = cd::number_or(sj, "solver", "tolerance", cfg.solve.tol);
    cfg.solve.max_iters = cd::int_or(sj, "solver", "max_iters", cfg.solve.max_iters);
    cfg.solve.damping = cd::number_or(sj, "solver", "damping", cfg.solve.damping);
    if (!(cfg.solve.tol > 0)) throw ConfigError("solver.tolerance: must be > 0");
    if (cfg.solve.max_iters <= 0) throw ConfigError("solver.max_iters: must be > 0");
    if (!(cfg.solve.damping > 0.0 && cfg.solve.damping <= 1.0))
      throw ConfigError("solver.damping: must be in (0, 1]");
  }

  cfg.g_grid = cd::default_g_grid();
  if (root.contains("sweep")) {
    const auto& sj = root.at("sweep");
    cd::reject_unknown_keys(sj, "sweep", {"g_grid"});
    if (sj.contains("g_grid")) {
      if (!sj.at("g_grid").is_array() || sj.at("g_grid").empty())
        throw ConfigError("sweep.g_grid: expected a non-empty array");
      cfg.g_grid.clear();
      for (const auto& gj : sj.at("g_grid")) {
        const double g = cd::number_or_sentinel(gj, "sweep.g_grid[]", "unlimited");
        if (!(g >= 0.0)) throw ConfigError("sweep.g_grid[]: caps must be >= 0");
        cfg.g_grid.push_back(g);
      }
    }
  }

  if (root.contains("search")) {
    const auto& sj = root.at("search");
    cd::reject_unknown_keys(sj, "search",
                            {"grid_f", "grid_p", "refine_tol", "starts"});
    cfg.search.grid_f = cd::int_or(sj, "search", "grid_f", cfg.search.grid_f);
    cfg.search.grid_p = cd::int_or(sj, "search", "grid_p", cfg.search.grid_p);
    cfg.search.refine_tol =
        cd::number_or(sj, "search", "refine_tol", cfg.search.refine_tol);
    cfg.search.refine_starts = cd::int_or(sj, "search", "starts",
                                          cfg.search.refine_starts);
    if (cfg.search.grid_f < 2 || cfg.search.grid_p < 2)
      throw ConfigError("search: fee grids need at least 2 points");
    if (!(cfg.search.refine_tol > 0))
      throw ConfigError("search.refine_tol: must be > 0");
    if (cfg.search.refine_starts < 1)
      throw ConfigError("search.starts: must be >= 1");
  }

  if (root.contains("oracle")) {
    const auto& oj = root.at("oracle");
    cd::reject_unknown_keys(oj, "oracle", {"n_u", "n_v"});
    cfg.oracle.n_u = cd::int_or(oj, "oracle", "n_u", cfg.oracle.n_u);
    cfg.oracle.n_v = cd::int_or(oj, "oracle", "n_v", cfg.oracle.n_v);
    if (cfg.oracle.n_u < 1 || cfg.oracle.n_v < 1)
      throw ConfigError("oracle: resolutions must be >= 1");
  }

  if (root.contains("verify")) {
    const auto& vj = root.at("verify");
    cd::reject_unknown_keys(vj, "verify",
                            {"equilibrium_cases", "monotonicity_pairs",
                             "invariance_cases", "equivalence_cases",
                             "dominance_cases", "bracket_caps"});
    cfg.verify.equilibrium_cases =
        cd::int_or(vj, "verify", "equilibrium_cases", cfg.verify.equilibrium_cases);
    cfg.verify.monotonicity_pairs =
        cd::int_or(vj, "verify", "monotonicity_pairs", cfg.verify.monotonicity_pairs);
    cfg.verify.invariance_cases =
        cd::int_or(vj, "verify", "invariance_cases", cfg.verify.invariance_cases);
    cfg.verify.equivalence_cases =
        cd::int_or(vj, "verify", "equivalence_cases", cfg.verify.equivalence_cases);
    cfg.verify.dominance_cases =
        cd::int_or(vj, "verify", "dominance_cases", cfg.verify.dominance_cases);
    if (vj.contains("bracket_caps")) {
      if (!vj.at("bracket_caps").is_array() || vj.at("bracket_caps").empty())
        throw ConfigError("verify.bracket_caps: expected a non-empty array");
      cfg.verify.bracket_caps.clear();
      for (const auto& gj : vj.at("bracket_caps")) {
        cfg.verify.bracket_caps.push_back(
            cd::number_or_sentinel(gj, "verify.bracket_caps[]", "unlimited"));
      }
    }
  }

  try {
    cfg.scenario.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(filename + ": " + e.what());
  }

  cfg.search.solve = cfg.solve;
  cfg.verify.search = cfg.search;
  cfg.verify.solve = cfg.solve;
  return cfg;
}

/// Load and parse a config file from disk.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

}  // namespace nettariff
