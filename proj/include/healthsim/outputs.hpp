#ifndef HEALTHSIM_OUTPUTS_HPP
#define HEALTHSIM_OUTPUTS_HPP

// Simulation outputs shared by the model families: state probabilities on a
// time grid and discounted value totals per state.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "healthsim/csv.hpp"
#include "healthsim/error.hpp"

namespace healthsim {

/// Units are the entities probabilities and values are reported for:
/// patients in cohort and partitioned survival models, subgroups (already
/// averaged over patients) in individual simulations.
struct UnitInfo {
  bool are_groups = false;
  std::vector<int> id;        // patient_id or grp_id
  std::vector<int> grp;       // grp_id of each unit
  std::vector<double> wt;     // weight within its group (sums to 1 per group)
  std::vector<double> grp_wt; // share of each group in the population

  size_t size() const { return id.size(); }

  /// Normalize raw patient weights within and across groups.
  static UnitInfo patients(std::vector<int> patient_id, std::vector<int> grp_id, const std::vector<double>& raw_wt) {
    UnitInfo u;
    u.id = std::move(patient_id);
    u.grp = std::move(grp_id);
    int n_grp = 0;
    for (int g : u.grp) n_grp = std::max(n_grp, g);
    std::vector<double> tot(static_cast<size_t>(n_grp), 0.0);
    for (size_t i = 0; i < u.grp.size(); ++i) tot[static_cast<size_t>(u.grp[i] - 1)] += raw_wt[i];
    double all = 0;
    for (double t : tot) {
      detail::require(t > 0, "patient weights within a group sum to zero");
      all += t;
    }
    for (size_t i = 0; i < u.grp.size(); ++i) u.wt.push_back(raw_wt[i] / tot[static_cast<size_t>(u.grp[i] - 1)]);
    for (double t : tot) u.grp_wt.push_back(t / all);
    return u;
  }

  static UnitInfo groups(const std::vector<double>& grp_wt) {
    UnitInfo u;
    u.are_groups = true;
    u.grp_wt = grp_wt;
    for (size_t g = 0; g < grp_wt.size(); ++g) {
      u.id.push_back(static_cast<int>(g + 1));
      u.grp.push_back(static_cast<int>(g + 1));
      u.wt.push_back(1.0);
    }
    return u;
  }
};

/// Probability of occupying each state (death last) at each grid time,
/// laid out (sample, strategy, unit, state, time).
class StateProbs {
 public:
  StateProbs() = default;
  StateProbs(size_t n_samples, size_t n_strategies, UnitInfo units, size_t n_states, std::vector<double> times)
      : n_samples_(n_samples),
        n_strategies_(n_strategies),
        n_states_(n_states),
        units_(std::move(units)),
        times_(std::move(times)),
        probs_(n_samples * n_strategies * units_.size() * n_states * times_.size(), 0.0) {}

  size_t n_samples() const { return n_samples_; }
  size_t n_strategies() const { return n_strategies_; }
  size_t n_units() const { return units_.size(); }
  size_t n_states() const { return n_states_; }
  size_t n_times() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const UnitInfo& units() const { return units_; }

  size_t index(size_t s, size_t j, size_t u, size_t h, size_t t) const {
    return (((s * n_strategies_ + j) * units_.size() + u) * n_states_ + h) * times_.size() + t;
  }
  double operator()(size_t s, size_t j, size_t u, size_t h, size_t t) const { return probs_[index(s, j, u, h, t)]; }
  double& operator()(size_t s, size_t j, size_t u, size_t h, size_t t) { return probs_[index(s, j, u, h, t)]; }

  void write_csv(const std::string& path) const {
    csv::Writer w(path, units_.are_groups
                            ? std::vector<std::string>{"sample", "strategy_id", "grp_id", "state_id", "t", "prob"}
                            : std::vector<std::string>{"sample", "strategy_id", "grp_id", "patient_id", "patient_wt",
                                                       "state_id", "t", "prob"});
    for (size_t s = 0; s < n_samples_; ++s)
      for (size_t j = 0; j < n_strategies_; ++j)
        for (size_t u = 0; u < units_.size(); ++u)
          for (size_t h = 0; h < n_states_; ++h)
            for (size_t t = 0; t < times_.size(); ++t) {
              if (units_.are_groups)
                w.row(s + 1, j + 1, units_.id[u], h + 1, times_[t], (*this)(s, j, u, h, t));
              else
                w.row(s + 1, j + 1, units_.grp[u], units_.id[u], units_.wt[u], h + 1, times_[t],
                      (*this)(s, j, u, h, t));
            }
  }

 private:
  size_t n_samples_ = 0, n_strategies_ = 0, n_states_ = 0;
  UnitInfo units_;
  std::vector<double> times_;
  std::vector<double> probs_;
};

/// Discounted totals of one value category (a cost category, QALYs or
/// life-years) laid out (discount rate, sample, strategy, unit, state).
class ValueTotals {
 public:
  ValueTotals() = default;
  ValueTotals(std::string category, std::vector<double> dr, size_t n_samples, size_t n_strategies, UnitInfo units,
              size_t n_states)
      : category_(std::move(category)),
        dr_(std::move(dr)),
        n_samples_(n_samples),
        n_strategies_(n_strategies),
        n_states_(n_states),
        units_(std::move(units)),
        values_(dr_.size() * n_samples * n_strategies * units_.size() * n_states, 0.0) {}

  const std::string& category() const { return category_; }
  const std::vector<double>& dr() const { return dr_; }
  size_t n_samples() const { return n_samples_; }
  size_t n_strategies() const { return n_strategies_; }
  size_t n_units() const { return units_.size(); }
  size_t n_states() const { return n_states_; }
  const UnitInfo& units() const { return units_; }

  size_t index(size_t d, size_t s, size_t j, size_t u, size_t h) const {
    return (((d * n_samples_ + s) * n_strategies_ + j) * units_.size() + u) * n_states_ + h;
  }
  double operator()(size_t d, size_t s, size_t j, size_t u, size_t h) const { return values_[index(d, s, j, u, h)]; }
  double& operator()(size_t d, size_t s, size_t j, size_t u, size_t h) { return values_[index(d, s, j, u, h)]; }

  size_t dr_index(double r) const {
    for (size_t d = 0; d < dr_.size(); ++d)
      if (std::abs(dr_[d] - r) < 1e-12) return d;
    throw ValidationError("discount rate " + csv::format(r) + " was not computed for " + category_);
  }

 private:
  std::string category_;
  std::vector<double> dr_;
  size_t n_samples_ = 0, n_strategies_ = 0, n_states_ = 0;
  UnitInfo units_;
  std::vector<double> values_;
};

/// Long-format table of several value categories.
inline void write_value_totals(const std::string& path, const std::vector<const ValueTotals*>& totals) {
  detail::require(!totals.empty(), "no value totals to write");
  const bool groups = totals.front()->units().are_groups;
  std::vector<std::string> header{"category", "dr", "sample", "strategy_id", "grp_id"};
  if (!groups) header.push_back("patient_id");
  header.insert(header.end(), {"state_id", "value"});
  csv::Writer w(path, header);
  for (const auto* v : totals) {
    const auto& u = v->units();
    for (size_t d = 0; d < v->dr().size(); ++d)
      for (size_t s = 0; s < v->n_samples(); ++s)
        for (size_t j = 0; j < v->n_strategies(); ++j)
          for (size_t k = 0; k < u.size(); ++k)
            for (size_t h = 0; h < v->n_states(); ++h) {
              if (groups)
                w.row(v->category(), v->dr()[d], s + 1, j + 1, u.id[k], h + 1, (*v)(d, s, j, k, h));
              else
                w.row(v->category(), v->dr()[d], s + 1, j + 1, u.grp[k], u.id[k], h + 1, (*v)(d, s, j, k, h));
            }
  }
}

}  // namespace healthsim

#endif  // HEALTHSIM_OUTPUTS_HPP
