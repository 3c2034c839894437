#ifndef HEALTHSIM_COHORT_DTSTM_HPP
#define HEALTHSIM_COHORT_DTSTM_HPP

// Cohort discrete-time state transition model: x_{c+1} = x_c P_c, and
// discounted expected values integrated over the cycle grid.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "healthsim/error.hpp"
#include "healthsim/outputs.hpp"
#include "healthsim/parallel.hpp"
#include "healthsim/state_values.hpp"
#include "healthsim/transprobs.hpp"

namespace healthsim {

enum class Integration { left, right, trapezoid };

inline Integration parse_integration(std::string_view s) {
  if (s == "left") return Integration::left;
  if (s == "right") return Integration::right;
  if (s == "trapezoid") return Integration::trapezoid;
  throw ValidationError("integration method must be left, right or trapezoid, not '" + std::string(s) + "'");
}

struct CohortSettings {
  double cycle_length = 1.0;
  size_t n_cycles = 1;
  Integration method = Integration::trapezoid;

  void validate() const {
    detail::require(cycle_length > 0 && std::isfinite(cycle_length), "cycle_length must be positive");
    detail::require(n_cycles > 0, "n_cycles must be positive");
  }
  std::vector<double> times() const {
    std::vector<double> t(n_cycles + 1);
    for (size_t c = 0; c <= n_cycles; ++c) t[c] = static_cast<double>(c) * cycle_length;
    return t;
  }
};

/// Units (patients) of a transition probability array, read from its ids.
inline UnitInfo units_of(const TransProbArray& tp) {
  std::vector<int> pid, grp;
  std::vector<double> wt;
  for (size_t i = 0; i < tp.n_patients(); ++i) {
    const auto& id = tp.ids()[tp.index(0, 0, i, 0)];
    pid.push_back(id.patient_id);
    grp.push_back(id.grp_id);
    wt.push_back(id.patient_wt);
  }
  return UnitInfo::patients(std::move(pid), std::move(grp), wt);
}

/// State occupancy at t = 0, u, ..., n_cycles * u. Cycle c uses the matrix of
/// the interval containing its start time. x0 defaults to everyone in state 1.
inline StateProbs sim_stateprobs_cohort(const TransProbArray& tp, const CohortSettings& s,
                                        std::optional<std::vector<double>> x0 = std::nullopt, unsigned threads = 1) {
  s.validate();
  const size_t h = tp.n_states();
  detail::require(h > 0 && tp.n_matrices() > 0, "transition probability array is empty");
  Eigen::RowVectorXd init = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(h));
  if (x0) {
    detail::require(x0->size() == h, "initial state vector needs one entry per state including death");
    double sum = 0;
    for (size_t k = 0; k < h; ++k) {
      detail::require((*x0)[k] >= 0, "initial state probabilities must be nonnegative");
      init(static_cast<Eigen::Index>(k)) = (*x0)[k];
      sum += (*x0)[k];
    }
    detail::require(std::abs(sum - 1) < 1e-9, "initial state probabilities must sum to 1");
  } else {
    init(0) = 1.0;
  }
  tp.validate();
  const auto times = s.times();
  std::vector<size_t> interval(s.n_cycles);
  for (size_t c = 0; c < s.n_cycles; ++c) interval[c] = tp.interval_at(times[c]);

  StateProbs out(tp.n_samples(), tp.n_strategies(), units_of(tp), h, times);
  parallel_for(tp.n_samples(), threads, [&](size_t smp) {
    Eigen::RowVectorXd x(static_cast<Eigen::Index>(h));
    for (size_t j = 0; j < tp.n_strategies(); ++j)
      for (size_t i = 0; i < tp.n_patients(); ++i) {
        x = init;
        for (size_t k = 0; k < h; ++k) out(smp, j, i, k, 0) = x(static_cast<Eigen::Index>(k));
        for (size_t c = 0; c < s.n_cycles; ++c) {
          x = x * tp.matrix(tp.index(smp, j, i, interval[c]));
          for (size_t k = 0; k < h; ++k) out(smp, j, i, k, c + 1) = x(static_cast<Eigen::Index>(k));
        }
      }
  });
  return out;
}

/// Discounted integral of z_h(t) e^{-rt} p_h(t) over the state probability
/// grid for each discount rate, by left, right or trapezoid sums. Values are
/// looked up on model time at each grid point.
inline ValueTotals integrate_statevals(const StateProbs& sp, const MeanValueParams& vals, const std::vector<double>& dr,
                                       Integration method, std::string category = "value") {
  detail::require(!sp.units().are_groups, "integrate_statevals needs patient-level state probabilities");
  detail::require(vals.n_samples() == sp.n_samples(), "state values have " + std::to_string(vals.n_samples()) +
                                                          " samples but state probabilities have " +
                                                          std::to_string(sp.n_samples()));
  detail::require(vals.n_strategies() == sp.n_strategies() && vals.n_patients() == sp.n_units(),
                  "state values and state probabilities disagree on strategies or patients");
  detail::require(vals.n_states() + 1 == sp.n_states(), "state values are missing for some states (need " +
                                                            std::to_string(sp.n_states() - 1) + ")");
  detail::require(!(vals.time_reset() && vals.n_intervals() > 1),
                  "time-in-state values are not supported by cohort models; use model time intervals");
  detail::require(sp.n_times() >= 2, "need at least two time points to integrate");
  for (double r : dr) detail::require(r >= 0 && std::isfinite(r), "discount rates must be nonnegative");

  const auto& t = sp.times();
  std::vector<size_t> interval(t.size());
  for (size_t k = 0; k < t.size(); ++k) interval[k] = vals.interval_at(t[k]);

  ValueTotals out(std::move(category), dr, sp.n_samples(), sp.n_strategies(), sp.units(), sp.n_states());
  std::vector<double> f(t.size());
  for (size_t d = 0; d < dr.size(); ++d)
    for (size_t s = 0; s < sp.n_samples(); ++s)
      for (size_t j = 0; j < sp.n_strategies(); ++j)
        for (size_t u = 0; u < sp.n_units(); ++u)
          for (size_t h = 0; h < sp.n_states(); ++h) {
            for (size_t k = 0; k < t.size(); ++k)
              f[k] = vals.value(s, j, u, h, interval[k]) * std::exp(-dr[d] * t[k]) * sp(s, j, u, h, k);
            double total = 0;
            for (size_t k = 0; k + 1 < t.size(); ++k) {
              const double w = t[k + 1] - t[k];
              switch (method) {
                case Integration::left: total += w * f[k]; break;
                case Integration::right: total += w * f[k + 1]; break;
                case Integration::trapezoid: total += 0.5 * w * (f[k] + f[k + 1]); break;
              }
            }
            out(d, s, j, u, h) = total;
          }
  return out;
}

}  // namespace healthsim

#endif  // HEALTHSIM_COHORT_DTSTM_HPP
