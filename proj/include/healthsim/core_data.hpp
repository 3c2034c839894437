#ifndef HEALTHSIM_CORE_DATA_HPP
#define HEALTHSIM_CORE_DATA_HPP

// Model context: treatment strategies, target population, health states and
// the transition structure, plus the canonical (strategy, patient) input data
// every simulation indexes into.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "healthsim/csv.hpp"
#include "healthsim/error.hpp"

namespace healthsim {

/// Named real-valued columns stored row-major.
struct Covariates {
  std::vector<std::string> names;
  std::vector<double> values;

  size_t n_cols() const { return names.size(); }
  size_t n_rows() const { return names.empty() ? 0 : values.size() / names.size(); }
  double at(size_t row, size_t col) const { return values[row * names.size() + col]; }
  std::optional<size_t> find(std::string_view name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }
};

struct StrategyTable {
  std::vector<int> strategy_id;
  std::vector<std::string> strategy_name;
  Covariates covariates;

  size_t size() const { return strategy_id.size(); }
};

struct PatientTable {
  std::vector<int> patient_id;
  std::vector<int> grp_id;            // empty: every patient in group 1
  std::vector<double> patient_wt;     // empty: equal weights
  std::vector<std::string> grp_name;  // empty: groups are unnamed
  Covariates covariates;

  size_t size() const { return patient_id.size(); }
};

/// Non-death health states; the death state is implied as the last state.
struct StateTable {
  std::vector<int> state_id;
  std::vector<std::string> state_name;

  size_t size() const { return state_id.size(); }
};

/// H x H transition structure. Cell (r, s) holds the transition number for a
/// permitted r -> s move; transitions are numbered 1..n row-major.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;

  /// `cells` is row-major with 0 marking a forbidden transition.
  TransitionMatrix(size_t n_states, std::vector<int> cells, std::vector<std::string> state_names = {})
      : n_states_(n_states), cells_(std::move(cells)), names_(std::move(state_names)) {
    detail::require(n_states_ >= 2, "transition matrix needs at least 2 states");
    detail::require(cells_.size() == n_states_ * n_states_, "transition matrix must be square");
    detail::require(names_.empty() || names_.size() == n_states_,
                    "transition matrix state names must match its dimension");
    int expected = 1;
    from_.assign(1, 0);
    to_.assign(1, 0);
    by_state_.assign(n_states_ + 1, {});
    for (size_t r = 0; r < n_states_; ++r) {
      for (size_t s = 0; s < n_states_; ++s) {
        int v = cells_[r * n_states_ + s];
        if (v == 0) continue;
        detail::require(r != s, "transition matrix diagonal must be empty");
        detail::require(v == expected, "transition numbers must be 1..n numbered row-major; found " +
                                           std::to_string(v) + " where " + std::to_string(expected) +
                                           " was expected");
        from_.push_back(static_cast<int>(r + 1));
        to_.push_back(static_cast<int>(s + 1));
        by_state_[r + 1].push_back(v);
        ++expected;
      }
    }
    detail::require(by_state_[n_states_].empty(), "the death state (last row) cannot have outgoing transitions");
  }

  size_t n_states() const { return n_states_; }
  size_t n_transitions() const { return from_.size() - 1; }
  const std::vector<std::string>& state_names() const { return names_; }

  std::optional<int> transition(int from, int to) const {
    int v = cells_.at(static_cast<size_t>(from - 1) * n_states_ + static_cast<size_t>(to - 1));
    if (v == 0) return std::nullopt;
    return v;
  }
  int from(int trans) const { return from_.at(static_cast<size_t>(trans)); }
  int to(int trans) const { return to_.at(static_cast<size_t>(trans)); }

  /// Transition numbers leaving `state`, ordered by destination state.
  const std::vector<int>& transitions_from(int state) const { return by_state_.at(static_cast<size_t>(state)); }
  bool is_absorbing(int state) const { return transitions_from(state).empty(); }

 private:
  size_t n_states_ = 0;
  std::vector<int> cells_;
  std::vector<std::string> names_;
  std::vector<int> from_, to_;
  std::vector<std::vector<int>> by_state_;
};

namespace detail {

inline void require_contiguous(const std::vector<int>& ids, const std::string& what) {
  for (size_t i = 0; i < ids.size(); ++i)
    require(ids[i] == static_cast<int>(i + 1),
            what + " values must be unique, contiguous from 1 and sorted; found " + std::to_string(ids[i]) +
                " at position " + std::to_string(i + 1));
}

template <typename T>
std::vector<T> permute(const std::vector<T>& v, const std::vector<size_t>& order) {
  if (v.empty()) return v;
  std::vector<T> out;
  out.reserve(order.size());
  for (size_t i : order) out.push_back(v[i]);
  return out;
}

inline Covariates permute_rows(const Covariates& c, const std::vector<size_t>& order) {
  Covariates out;
  out.names = c.names;
  out.values.reserve(c.values.size());
  for (size_t i : order)
    for (size_t j = 0; j < c.n_cols(); ++j) out.values.push_back(c.at(i, j));
  return out;
}

}  // namespace detail

/// The universe a simulation indexes into. Construction sorts tables into
/// canonical id order, fills defaults and validates; the object is immutable
/// afterwards.
class ModelContext {
 public:
  ModelContext(StrategyTable strategies, PatientTable patients, StateTable states,
               std::optional<TransitionMatrix> tmat = std::nullopt)
      : strategies_(std::move(strategies)),
        patients_(std::move(patients)),
        states_(std::move(states)),
        tmat_(std::move(tmat)) {
    if (strategies_.size() == 0) throw ValidationError("strategies table is empty");
    if (patients_.size() == 0) throw ValidationError("patients table is empty");
    if (states_.size() == 0) throw ValidationError("states table is empty");
    canonicalize_strategies();
    canonicalize_patients();
    canonicalize_states();
    if (tmat_)
      detail::require(tmat_->n_states() == states_.size() + 1,
                      "transition matrix dimension (" + std::to_string(tmat_->n_states()) +
                          ") must equal the number of states plus death (" +
                          std::to_string(states_.size() + 1) + ")");
  }

  const StrategyTable& strategies() const { return strategies_; }
  const PatientTable& patients() const { return patients_; }
  const StateTable& states() const { return states_; }
  const std::optional<TransitionMatrix>& tmat() const { return tmat_; }

  size_t n_strategies() const { return strategies_.size(); }
  size_t n_patients() const { return patients_.size(); }
  /// Number of non-death states.
  size_t n_states() const { return states_.size(); }
  int death_state() const { return static_cast<int>(states_.size() + 1); }
  size_t n_groups() const { return n_groups_; }

  /// Patient weight normalized to sum to one within the patient's group.
  double weight_in_group(size_t patient) const { return wt_in_group_[patient]; }
  /// Share of the total patient weight held by group `grp_id`.
  double group_weight(int grp_id) const { return grp_weight_.at(static_cast<size_t>(grp_id - 1)); }
  const std::vector<double>& group_weights() const { return grp_weight_; }

  size_t patient_index(int patient_id) const {
    auto it = std::lower_bound(patients_.patient_id.begin(), patients_.patient_id.end(), patient_id);
    if (it == patients_.patient_id.end() || *it != patient_id)
      throw ValidationError("unknown patient_id " + std::to_string(patient_id));
    return static_cast<size_t>(it - patients_.patient_id.begin());
  }

 private:
  void canonicalize_strategies() {
    auto& t = strategies_;
    detail::require(t.strategy_name.empty() || t.strategy_name.size() == t.size(),
                    "strategy_name length must match strategy_id");
    std::vector<size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return t.strategy_id[a] < t.strategy_id[b]; });
    t.strategy_id = detail::permute(t.strategy_id, order);
    t.strategy_name = detail::permute(t.strategy_name, order);
    t.covariates = detail::permute_rows(t.covariates, order);
    detail::require_contiguous(t.strategy_id, "strategy_id");
  }

  void canonicalize_patients() {
    auto& t = patients_;
    const size_t n = t.size();
    if (t.grp_id.empty()) t.grp_id.assign(n, 1);
    if (t.patient_wt.empty()) t.patient_wt.assign(n, 1.0 / static_cast<double>(n));
    detail::require(t.grp_id.size() == n && t.patient_wt.size() == n &&
                        (t.grp_name.empty() || t.grp_name.size() == n),
                    "patients table columns have inconsistent lengths");
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return t.patient_id[a] < t.patient_id[b]; });
    t.patient_id = detail::permute(t.patient_id, order);
    t.grp_id = detail::permute(t.grp_id, order);
    t.patient_wt = detail::permute(t.patient_wt, order);
    t.grp_name = detail::permute(t.grp_name, order);
    t.covariates = detail::permute_rows(t.covariates, order);
    for (size_t i = 1; i < n; ++i)
      detail::require(t.patient_id[i] != t.patient_id[i - 1],
                      "duplicate patient_id " + std::to_string(t.patient_id[i]));
    for (size_t i = 0; i < n; ++i) {
      detail::require(t.patient_id[i] > 0, "patient_id must be positive");
      detail::require(std::isfinite(t.patient_wt[i]) && t.patient_wt[i] >= 0, "patient_wt must be nonnegative");
    }

    std::set<int> grps(t.grp_id.begin(), t.grp_id.end());
    std::vector<int> grp_vec(grps.begin(), grps.end());
    detail::require_contiguous(grp_vec, "grp_id");
    n_groups_ = grp_vec.size();

    std::vector<double> grp_total(n_groups_, 0.0);
    for (size_t i = 0; i < n; ++i) grp_total[static_cast<size_t>(t.grp_id[i] - 1)] += t.patient_wt[i];
    double total = std::accumulate(grp_total.begin(), grp_total.end(), 0.0);
    for (size_t g = 0; g < n_groups_; ++g)
      detail::require(grp_total[g] > 0, "patient weights in grp_id " + std::to_string(g + 1) + " sum to zero");
    wt_in_group_.resize(n);
    for (size_t i = 0; i < n; ++i)
      wt_in_group_[i] = t.patient_wt[i] / grp_total[static_cast<size_t>(t.grp_id[i] - 1)];
    grp_weight_.resize(n_groups_);
    for (size_t g = 0; g < n_groups_; ++g) grp_weight_[g] = grp_total[g] / total;

    if (!t.grp_name.empty()) {
      std::map<int, std::string> names;
      for (size_t i = 0; i < n; ++i) {
        auto [it, inserted] = names.emplace(t.grp_id[i], t.grp_name[i]);
        detail::require(inserted || it->second == t.grp_name[i],
                        "grp_id " + std::to_string(t.grp_id[i]) + " has more than one grp_name");
      }
    }
  }

  void canonicalize_states() {
    auto& t = states_;
    detail::require(t.state_name.empty() || t.state_name.size() == t.size(),
                    "state_name length must match state_id");
    std::vector<size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return t.state_id[a] < t.state_id[b]; });
    t.state_id = detail::permute(t.state_id, order);
    t.state_name = detail::permute(t.state_name, order);
    detail::require_contiguous(t.state_id, "state_id");
  }

  StrategyTable strategies_;
  PatientTable patients_;
  StateTable states_;
  std::optional<TransitionMatrix> tmat_;
  size_t n_groups_ = 0;
  std::vector<double> wt_in_group_;
  std::vector<double> grp_weight_;
};

/// One row of the expanded input data.
struct InputRow {
  int strategy_id = 0;
  int patient_id = 0;
  int grp_id = 1;
  double patient_wt = 1.0;
  size_t strategy_index = 0;
  size_t patient_index = 0;
};

/// Cartesian product of strategies and patients in canonical
/// (strategy_id, patient_id) order, with covariates merged.
class InputData {
 public:
  InputData(std::vector<InputRow> rows, Covariates covariates, size_t n_strategies, size_t n_patients)
      : rows_(std::move(rows)), cov_(std::move(covariates)), n_strategies_(n_strategies), n_patients_(n_patients) {}

  size_t size() const { return rows_.size(); }
  const InputRow& row(size_t i) const { return rows_[i]; }
  const std::vector<InputRow>& rows() const { return rows_; }
  const Covariates& covariates() const { return cov_; }
  size_t n_strategies() const { return n_strategies_; }
  size_t n_patients() const { return n_patients_; }

  /// Append a derived covariate column (e.g. an explicit intercept of ones).
  void add_column(std::string name, const std::vector<double>& values) {
    detail::require(!cov_.find(name), "input data already has a column named '" + name + "'");
    detail::require(values.size() == size(), "new column length must equal the number of input rows");
    const size_t k = cov_.n_cols();
    std::vector<double> merged;
    merged.reserve(size() * (k + 1));
    for (size_t i = 0; i < size(); ++i) {
      for (size_t j = 0; j < k; ++j) merged.push_back(cov_.at(i, j));
      merged.push_back(values[i]);
    }
    cov_.names.push_back(std::move(name));
    cov_.values = std::move(merged);
  }

 private:
  std::vector<InputRow> rows_;
  Covariates cov_;
  size_t n_strategies_;
  size_t n_patients_;
};

/// Expand the named tables (`strategies`, `patients`) into input data.
inline InputData expand(const ModelContext& ctx, const std::vector<std::string>& by = {"strategies", "patients"}) {
  bool use_strategies = false, use_patients = false;
  for (const auto& b : by) {
    if (b == "strategies")
      use_strategies = true;
    else if (b == "patients")
      use_patients = true;
    else
      throw ValidationError("expand: unsupported table '" + b + "' (expected 'strategies' or 'patients')");
  }
  detail::require(use_strategies || use_patients, "expand: at least one table must be named");
  const auto& st = ctx.strategies();
  const auto& pt = ctx.patients();
  if (use_strategies && st.size() == 0) throw ValidationError("expand: strategies table is empty");
  if (use_patients && pt.size() == 0) throw ValidationError("expand: patients table is empty");

  Covariates cov;
  if (use_strategies) cov.names = st.covariates.names;
  if (use_patients)
    for (const auto& n : pt.covariates.names) {
      if (std::find(cov.names.begin(), cov.names.end(), n) != cov.names.end())
        throw ValidationError("expand: covariate '" + n + "' appears in both strategies and patients");
      cov.names.push_back(n);
    }

  const size_t ns = use_strategies ? st.size() : 1;
  const size_t np = use_patients ? pt.size() : 1;
  std::vector<InputRow> rows;
  rows.reserve(ns * np);
  cov.values.reserve(ns * np * cov.n_cols());
  for (size_t j = 0; j < ns; ++j) {
    for (size_t i = 0; i < np; ++i) {
      InputRow r;
      r.strategy_index = j;
      r.patient_index = i;
      r.strategy_id = use_strategies ? st.strategy_id[j] : 0;
      if (use_patients) {
        r.patient_id = pt.patient_id[i];
        r.grp_id = pt.grp_id[i];
        r.patient_wt = pt.patient_wt[i];
      }
      rows.push_back(r);
      if (use_strategies)
        for (size_t c = 0; c < st.covariates.n_cols(); ++c) cov.values.push_back(st.covariates.at(j, c));
      if (use_patients)
        for (size_t c = 0; c < pt.covariates.n_cols(); ++c) cov.values.push_back(pt.covariates.at(i, c));
    }
  }
  return InputData(std::move(rows), std::move(cov), ns, np);
}

/// Name -> integer pairs for one identifier dimension, in id order.
struct LabelDimension {
  std::string id_name;
  std::vector<std::pair<std::string, int>> labels;

  std::optional<int> id_of(std::string_view name) const {
    for (const auto& [n, id] : labels)
      if (n == name) return id;
    return std::nullopt;
  }
};

struct LabelMap {
  std::vector<LabelDimension> dims;

  const LabelDimension* find(std::string_view id_name) const {
    for (const auto& d : dims)
      if (d.id_name == id_name) return &d;
    return nullptr;
  }
};

inline LabelMap get_labels(const ModelContext& ctx) {
  auto check_unique = [](const LabelDimension& d) {
    std::set<std::string> seen;
    for (const auto& [n, id] : d.labels)
      if (!seen.insert(n).second) throw ValidationError("duplicate label '" + n + "' for " + d.id_name);
  };
  LabelMap out;

  LabelDimension strat{"strategy_id", {}};
  const auto& st = ctx.strategies();
  for (size_t j = 0; j < st.size(); ++j)
    strat.labels.emplace_back(st.strategy_name.empty() ? "Strategy " + std::to_string(st.strategy_id[j])
                                                       : st.strategy_name[j],
                              st.strategy_id[j]);
  check_unique(strat);
  out.dims.push_back(std::move(strat));

  LabelDimension states{"state_id", {}};
  const auto& s = ctx.states();
  for (size_t h = 0; h < s.size(); ++h)
    states.labels.emplace_back(s.state_name.empty() ? "State " + std::to_string(s.state_id[h]) : s.state_name[h],
                               s.state_id[h]);
  std::string death = "Death";
  if (ctx.tmat() && !ctx.tmat()->state_names().empty()) death = ctx.tmat()->state_names().back();
  states.labels.emplace_back(death, ctx.death_state());
  check_unique(states);
  out.dims.push_back(std::move(states));

  const auto& p = ctx.patients();
  if (!p.grp_name.empty()) {
    LabelDimension grp{"grp_id", {}};
    std::map<int, std::string> names;
    for (size_t i = 0; i < p.size(); ++i) names.emplace(p.grp_id[i], p.grp_name[i]);
    for (const auto& [id, n] : names) grp.labels.emplace_back(n, id);
    check_unique(grp);
    out.dims.push_back(std::move(grp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV loading. Reserved columns: strategy_id, patient_id, state_id, grp_id,
// patient_wt; *_name columns hold labels; every other column is a real-valued
// covariate.

namespace detail {

inline Covariates covariates_from(const csv::Table& t, const std::set<std::string>& skip) {
  Covariates c;
  std::vector<size_t> cols;
  for (size_t j = 0; j < t.n_cols(); ++j) {
    if (skip.count(t.header()[j])) continue;
    c.names.push_back(t.header()[j]);
    cols.push_back(j);
  }
  c.values.reserve(t.n_rows() * cols.size());
  for (size_t i = 0; i < t.n_rows(); ++i)
    for (size_t j : cols) {
      const auto& cell = t.cell(i, j);
      double v = 0;
      try {
        v = t.number(i, j);
      } catch (const ValidationError&) {
        throw ValidationError(t.source() + ": covariate column '" + t.header()[j] +
                              "' must be numeric (encode categories as indicator columns); found '" + cell + "'");
      }
      c.values.push_back(v);
    }
  return c;
}

}  // namespace detail

inline StrategyTable load_strategies(const csv::Table& t) {
  StrategyTable s;
  const size_t id = t.col("strategy_id");
  auto name = t.find("strategy_name");
  for (size_t i = 0; i < t.n_rows(); ++i) {
    s.strategy_id.push_back(static_cast<int>(t.integer(i, id)));
    if (name) s.strategy_name.push_back(t.cell(i, *name));
  }
  s.covariates = detail::covariates_from(t, {"strategy_id", "strategy_name"});
  return s;
}

inline PatientTable load_patients(const csv::Table& t) {
  PatientTable p;
  const size_t id = t.col("patient_id");
  auto grp = t.find("grp_id");
  auto wt = t.find("patient_wt");
  auto gname = t.find("grp_name");
  for (size_t i = 0; i < t.n_rows(); ++i) {
    p.patient_id.push_back(static_cast<int>(t.integer(i, id)));
    if (grp) p.grp_id.push_back(static_cast<int>(t.integer(i, *grp)));
    if (wt) p.patient_wt.push_back(t.number(i, *wt));
    if (gname) p.grp_name.push_back(t.cell(i, *gname));
  }
  p.covariates = detail::covariates_from(t, {"patient_id", "grp_id", "patient_wt", "grp_name"});
  return p;
}

inline StateTable load_states(const csv::Table& t) {
  StateTable s;
  const size_t id = t.col("state_id");
  auto name = t.find("state_name");
  for (size_t i = 0; i < t.n_rows(); ++i) {
    s.state_id.push_back(static_cast<int>(t.integer(i, id)));
    if (name) s.state_name.push_back(t.cell(i, *name));
  }
  for (size_t j = 0; j < t.n_cols(); ++j)
    detail::require(t.header()[j] == "state_id" || t.header()[j] == "state_name",
                    t.source() + ": unexpected column '" + t.header()[j] + "' in states table");
  return s;
}

/// Square matrix CSV: the first column holds row labels, the header holds
/// the destination state names, cells hold transition numbers or NA.
inline TransitionMatrix load_transition_matrix(const csv::Table& t) {
  const size_t h = t.n_rows();
  detail::require(t.n_cols() == h + 1,
                  t.source() + ": transition matrix must have one label column plus one column per state");
  std::vector<std::string> names(t.header().begin() + 1, t.header().end());
  std::vector<int> cells(h * h, 0);
  for (size_t r = 0; r < h; ++r)
    for (size_t s = 0; s < h; ++s)
      if (!t.is_missing(r, s + 1)) cells[r * h + s] = static_cast<int>(t.integer(r, s + 1));
  return TransitionMatrix(h, std::move(cells), std::move(names));
}

}  // namespace healthsim

#endif  // HEALTHSIM_CORE_DATA_HPP
