#ifndef HEALTHSIM_STATEVALS_HPP
#define HEALTHSIM_STATEVALS_HPP

// State-value tables: per-state distributions (or pre-simulated draws),
// optionally keyed by strategy, group or patient and time interval, and their
// PSA draw into MeanValueParams.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "healthsim/coefs.hpp"
#include "healthsim/core_data.hpp"
#include "healthsim/csv.hpp"
#include "healthsim/error.hpp"
#include "healthsim/rng.hpp"
#include "healthsim/state_values.hpp"

namespace healthsim {

struct StateValRow {
  int state_id = 1;
  std::optional<int> strategy_id;
  std::optional<int> grp_id;
  std::optional<int> patient_id;
  std::optional<double> time_start;
  ValueDist dist = ValueDist::fixed;
  std::map<std::string, double> args;
  std::optional<int> sample;  // pre-simulated tables: 1-based sample with args["value"]
};

struct StateValTable {
  std::vector<StateValRow> rows;
  bool presimulated = false;

  bool by_strategy() const { return !rows.empty() && rows.front().strategy_id.has_value(); }
  bool by_grp() const { return !rows.empty() && rows.front().grp_id.has_value(); }
  bool by_patient() const { return !rows.empty() && rows.front().patient_id.has_value(); }
  bool by_time() const { return !rows.empty() && rows.front().time_start.has_value(); }
};

inline const std::vector<std::string>& stateval_arg_names() {
  static const std::vector<std::string> names{"est",    "mean",  "se",    "sd",   "meanlog", "sdlog", "shape1",
                                              "shape2", "shape", "rate", "scale", "min",     "max"};
  return names;
}

/// Columns: state_id, optional strategy_id / grp_id / patient_id /
/// time_start, then either `dist` plus argument columns or `sample` and
/// `value` for pre-simulated draws. Empty and NA cells mean "not given".
inline StateValTable load_stateval_table(const csv::Table& t) {
  StateValTable tbl;
  tbl.presimulated = t.has("sample");
  if (tbl.presimulated) t.col("value");
  else t.col("dist");
  auto opt_int = [&](size_t r, std::string_view name) -> std::optional<int> {
    auto c = t.find(name);
    if (!c) return std::nullopt;
    if (t.is_missing(r, *c)) throw ValidationError(t.source() + ": missing " + std::string(name) + " on row " + std::to_string(r + 1));
    return static_cast<int>(t.integer(r, *c));
  };
  detail::require(!(t.has("grp_id") && t.has("patient_id")),
                  t.source() + ": state values may be keyed by grp_id or patient_id, not both");
  for (size_t r = 0; r < t.n_rows(); ++r) {
    StateValRow row;
    row.state_id = static_cast<int>(t.integer(r, t.col("state_id")));
    row.strategy_id = opt_int(r, "strategy_id");
    row.grp_id = opt_int(r, "grp_id");
    row.patient_id = opt_int(r, "patient_id");
    if (auto c = t.find("time_start")) row.time_start = t.number(r, *c);
    if (tbl.presimulated) {
      row.sample = static_cast<int>(t.integer(r, t.col("sample")));
      row.args["value"] = t.number(r, t.col("value"));
    } else {
      row.dist = parse_value_dist(t.cell(r, t.col("dist")));
      for (const auto& a : stateval_arg_names())
        if (auto c = t.find(a); c && !t.is_missing(r, *c)) row.args[a] = t.number(r, *c);
    }
    tbl.rows.push_back(std::move(row));
  }
  detail::require(!tbl.rows.empty(), t.source() + ": state value table is empty");
  return tbl;
}

/// Draw n samples of every table entry and broadcast over the dimensions the
/// table does not key on. Each entry draws from its own sub-stream keyed by
/// its ids, so row order in the table does not matter.
inline MeanValueParams stateval_draw(const StateValTable& tbl, const ModelContext& ctx, size_t n, bool time_reset,
                                     const CounterRng& rng) {
  detail::require(n > 0, "stateval_draw: number of samples must be positive");
  detail::require(!tbl.rows.empty(), "stateval_draw: state value table is empty");
  const bool by_strat = tbl.by_strategy(), by_grp = tbl.by_grp(), by_pat = tbl.by_patient(), by_time = tbl.by_time();
  for (const auto& r : tbl.rows)
    detail::require(r.strategy_id.has_value() == by_strat && r.grp_id.has_value() == by_grp &&
                        r.patient_id.has_value() == by_pat && r.time_start.has_value() == by_time,
                    "state value rows must all use the same key columns");
  detail::require(!(by_grp && by_pat), "state values may be keyed by grp_id or patient_id, not both");

  const size_t n_states = ctx.n_states();
  const size_t n_units = by_grp ? ctx.n_groups() : by_pat ? ctx.n_patients() : 1;
  const size_t n_strat = by_strat ? ctx.n_strategies() : 1;

  // Key: (state index, strategy index, unit index) -> time_start -> rows
  using Key = std::tuple<size_t, size_t, size_t>;
  std::map<Key, std::map<double, std::vector<const StateValRow*>>> groups;
  for (const auto& r : tbl.rows) {
    detail::require(r.state_id >= 1 && static_cast<size_t>(r.state_id) <= n_states,
                    "state value table references unknown state_id " + std::to_string(r.state_id));
    size_t j = 0, u = 0;
    if (by_strat) {
      detail::require(*r.strategy_id >= 1 && static_cast<size_t>(*r.strategy_id) <= ctx.n_strategies(),
                      "state value table references unknown strategy_id " + std::to_string(*r.strategy_id));
      j = static_cast<size_t>(*r.strategy_id - 1);
    }
    if (by_grp) {
      detail::require(*r.grp_id >= 1 && static_cast<size_t>(*r.grp_id) <= ctx.n_groups(),
                      "state value table references unknown grp_id " + std::to_string(*r.grp_id));
      u = static_cast<size_t>(*r.grp_id - 1);
    }
    if (by_pat) u = ctx.patient_index(*r.patient_id);
    const double t0 = by_time ? *r.time_start : 0.0;
    groups[{static_cast<size_t>(r.state_id - 1), j, u}][t0].push_back(&r);
  }

  std::vector<std::string> missing;
  std::optional<std::vector<double>> time_starts;
  auto key_name = [&](size_t h, size_t j, size_t u) {
    std::string s = "state_id=" + std::to_string(h + 1);
    if (by_strat) s += " strategy_id=" + std::to_string(j + 1);
    if (by_grp) s += " grp_id=" + std::to_string(u + 1);
    if (by_pat) s += " patient_id=" + std::to_string(ctx.patients().patient_id[u]);
    return s;
  };
  for (size_t h = 0; h < n_states; ++h)
    for (size_t j = 0; j < n_strat; ++j)
      for (size_t u = 0; u < n_units; ++u) {
        auto it = groups.find({h, j, u});
        if (it == groups.end()) {
          missing.push_back(key_name(h, j, u));
          continue;
        }
        std::vector<double> starts;
        for (const auto& [t0, rows] : it->second) starts.push_back(t0);
        detail::require(starts.front() == 0.0, "time_start must begin at 0 for " + key_name(h, j, u));
        if (!time_starts) time_starts = starts;
        detail::require(*time_starts == starts, "all state value groups must share the same time_start values");
      }
  if (!missing.empty()) {
    std::string msg = "state value table is missing " + std::to_string(missing.size()) + " key(s): ";
    for (size_t i = 0; i < missing.size() && i < 10; ++i) msg += (i ? "; " : "") + missing[i];
    if (missing.size() > 10) msg += "; ...";
    throw ValidationError(msg);
  }

  const size_t n_int = time_starts->size();
  MeanValueParams mv({n, ctx.n_strategies(), ctx.n_patients(), n_states, n_int}, {true, by_strat, by_grp || by_pat, true, true},
                     *time_starts, time_reset);
  const auto& grp_of = ctx.patients().grp_id;
  for (const auto& [key, by_t] : groups) {
    const auto [h, j, u] = key;
    size_t m = 0;
    for (const auto& [t0, rows] : by_t) {
      std::vector<double> draws(n);
      if (tbl.presimulated) {
        detail::require(rows.size() == n, "pre-simulated values for " + key_name(h, j, u) + " need exactly " +
                                              std::to_string(n) + " samples, found " + std::to_string(rows.size()));
        std::vector<bool> seen(n, false);
        for (const auto* r : rows) {
          detail::require(*r->sample >= 1 && static_cast<size_t>(*r->sample) <= n && !seen[static_cast<size_t>(*r->sample - 1)],
                          "pre-simulated samples must be 1.." + std::to_string(n) + " without repeats");
          seen[static_cast<size_t>(*r->sample - 1)] = true;
          draws[static_cast<size_t>(*r->sample - 1)] = r->args.at("value");
        }
      } else {
        detail::require(rows.size() == 1, "duplicate state value entry for " + key_name(h, j, u));
        const auto* r = rows.front();
        auto dist = ScalarDist::from_args(r->dist, [&](std::string_view a) -> std::optional<double> {
          auto it = r->args.find(std::string(a));
          return it == r->args.end() ? std::nullopt : std::optional<double>(it->second);
        });
        CounterRng s = rng.substream({h, j, u, m});
        for (auto& d : draws) d = dist.draw(s);
      }
      for (size_t s = 0; s < n; ++s) {
        if (by_grp) {
          for (size_t i = 0; i < ctx.n_patients(); ++i)
            if (static_cast<size_t>(grp_of[i] - 1) == u) mv.at(s, j, i, h, m) = draws[s];
        } else {
          mv.at(s, j, u, h, m) = draws[s];
        }
      }
      ++m;
    }
  }
  mv.validate();
  return mv;
}

}  // namespace healthsim

#endif  // HEALTHSIM_STATEVALS_HPP
