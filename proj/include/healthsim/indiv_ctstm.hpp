#ifndef HEALTHSIM_INDIV_CTSTM_HPP
#define HEALTHSIM_INDIV_CTSTM_HPP

// Individual continuous-time state transition model: simulate each patient's
// trajectory through competing latent transition times, then estimate state
// probabilities and continuously discounted values from the trajectories.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "healthsim/coefs.hpp"
#include "healthsim/core_data.hpp"
#include "healthsim/error.hpp"
#include "healthsim/outputs.hpp"
#include "healthsim/parallel.hpp"
#include "healthsim/rng.hpp"
#include "healthsim/state_values.hpp"
#include "healthsim/survival_dists.hpp"

namespace healthsim {

enum class Clock { reset, forward };

inline Clock parse_clock(std::string_view s) {
  if (s == "reset") return Clock::reset;
  if (s == "forward") return Clock::forward;
  throw ValidationError("clock must be 'reset' or 'forward', not '" + std::string(s) + "'");
}

struct TransitionModel {
  TransitionMatrix tmat;
  std::vector<SurvivalParams> transitions;  // indexed by transition number - 1
  Clock clock = Clock::reset;
  std::vector<double> start_age;  // per patient position; empty means age 0
  double max_age = std::numeric_limits<double>::infinity();
  double max_t = 100.0;

  void validate(size_t n_patients) const {
    detail::require(transitions.size() == tmat.n_transitions(),
                    "need one survival model per transition (" + std::to_string(tmat.n_transitions()) + "), got " +
                        std::to_string(transitions.size()));
    for (const auto& t : transitions) t.validate();
    detail::require(max_t > 0, "max_t must be positive");
    detail::require(max_age > 0, "max_age must be positive");
    detail::require(start_age.empty() || start_age.size() == n_patients, "start_age needs one value per patient");
    for (double a : start_age) detail::require(a >= 0 && std::isfinite(a), "start ages must be nonnegative");
    const int death = static_cast<int>(tmat.n_states());
    for (int h = 1; h < death; ++h)
      detail::require(!tmat.is_absorbing(h), "state " + std::to_string(h) +
                                                 " has no outgoing transitions but is not the death state");
  }
};

struct DisprogRow {
  int sample = 1;
  int strategy_id = 0;
  int patient_id = 0;
  int grp_id = 1;
  int from = 1;
  int to = 1;
  int final = 0;
  double time_start = 0.0;
  double time_stop = 0.0;
};

/// Simulated trajectories in canonical (sample, strategy, patient) order.
class DiseaseProgress {
 public:
  DiseaseProgress() = default;
  DiseaseProgress(size_t n_samples, size_t n_strategies, UnitInfo patients, size_t n_states, double max_t)
      : n_samples_(n_samples), n_strategies_(n_strategies), n_states_(n_states), max_t_(max_t),
        patients_(std::move(patients)) {}

  size_t n_samples() const { return n_samples_; }
  size_t n_strategies() const { return n_strategies_; }
  size_t n_patients() const { return patients_.size(); }
  size_t n_states() const { return n_states_; }
  int death_state() const { return static_cast<int>(n_states_); }
  double max_t() const { return max_t_; }
  const UnitInfo& patients() const { return patients_; }
  const std::vector<DisprogRow>& rows() const { return rows_; }

  size_t trajectory(size_t s, size_t j, size_t i) const { return (s * n_strategies_ + j) * patients_.size() + i; }
  std::span<const DisprogRow> rows_of(size_t traj) const {
    return std::span<const DisprogRow>(rows_).subspan(offsets_[traj], offsets_[traj + 1] - offsets_[traj]);
  }

  /// Append trajectories in canonical order; `counts` gives rows per trajectory.
  void append(std::vector<DisprogRow> rows, const std::vector<size_t>& counts) {
    if (offsets_.empty()) offsets_.push_back(0);
    for (size_t c : counts) offsets_.push_back(offsets_.back() + c);
    rows_.insert(rows_.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }

  void write_csv(const std::string& path) const {
    csv::Writer w(path, {"sample", "strategy_id", "patient_id", "grp_id", "from", "to", "final", "time_start",
                         "time_stop"});
    for (const auto& r : rows_)
      w.row(r.sample, r.strategy_id, r.patient_id, r.grp_id, r.from, r.to, r.final, r.time_start, r.time_stop);
  }

 private:
  size_t n_samples_ = 0, n_strategies_ = 0, n_states_ = 0;
  double max_t_ = 0;
  UnitInfo patients_;
  std::vector<DisprogRow> rows_;
  std::vector<size_t> offsets_;
};

inline UnitInfo patient_units(const InputData& input) {
  std::vector<int> pid, grp;
  std::vector<double> wt;
  for (const auto& r : input.rows())
    if (r.strategy_index == 0) {
      pid.push_back(r.patient_id);
      grp.push_back(r.grp_id);
      wt.push_back(r.patient_wt);
    }
  return UnitInfo::patients(std::move(pid), std::move(grp), wt);
}

/// Simulate every (sample, strategy, patient) trajectory. Each trajectory
/// has its own random stream derived from the seed and its indices, so the
/// result does not depend on the number of threads.
inline DiseaseProgress sim_disease(const TransitionModel& tm, const InputData& input, size_t n_samples, uint64_t seed,
                                   unsigned threads = 1) {
  tm.validate(input.n_patients());
  std::vector<SurvivalPredictor> preds;
  for (size_t t = 0; t < tm.transitions.size(); ++t) {
    detail::require(tm.transitions[t].n_samples() >= n_samples,
                    "transition " + std::to_string(t + 1) + " has " + std::to_string(tm.transitions[t].n_samples()) +
                        " coefficient samples but " + std::to_string(n_samples) + " were requested");
    preds.emplace_back(tm.transitions[t], input);
  }
  const int death = static_cast<int>(tm.tmat.n_states());
  const CounterRng master(derive_key(seed, "disease"));
  const size_t n_rows = input.size();

  std::vector<std::vector<DisprogRow>> by_sample(n_samples);
  std::vector<std::vector<size_t>> counts(n_samples);
  parallel_for(n_samples, threads, [&](size_t s) {
    auto& out = by_sample[s];
    auto& cnt = counts[s];
    cnt.reserve(n_rows);
    for (size_t row = 0; row < n_rows; ++row) {
      const InputRow& in = input.row(row);
      CounterRng rng = master.substream({s, in.strategy_index, in.patient_index});
      const double age0 = tm.start_age.empty() ? 0.0 : tm.start_age[in.patient_index];
      const double age_cap = tm.max_age - age0;  // model time at which max_age is reached
      const size_t before = out.size();
      auto emit = [&](int from, int to, bool final, double t0, double t1) {
        out.push_back({static_cast<int>(s + 1), in.strategy_id, in.patient_id, in.grp_id, from, to, final ? 1 : 0, t0,
                       t1});
      };
      int state = 1;
      double t = 0.0;
      if (age_cap <= 0) {
        emit(state, death, true, 0.0, 0.0);
      } else {
        while (true) {
          double best = std::numeric_limits<double>::infinity();
          int dest = state;
          for (int tr : tm.tmat.transitions_from(state)) {
            const Distribution d = preds[static_cast<size_t>(tr - 1)].predict(s, row);
            const double u = rng.uniform();
            const double latent = tm.clock == Clock::reset ? t + dist_sample(d, u) : dist_sample_truncated(d, t, u);
            if (latent < best) {  // strict: ties keep the lowest destination
              best = latent;
              dest = tm.tmat.to(tr);
            }
          }
          if (age_cap <= tm.max_t && best >= age_cap) {
            emit(state, death, true, t, age_cap);
            break;
          }
          if (best >= tm.max_t) {
            emit(state, state, true, t, tm.max_t);
            break;
          }
          emit(state, dest, dest == death, t, best);
          if (dest == death) break;
          t = best;
          state = dest;
        }
      }
      cnt.push_back(out.size() - before);
    }
  });

  DiseaseProgress dp(n_samples, input.n_strategies(), patient_units(input), tm.tmat.n_states(), tm.max_t);
  for (size_t s = 0; s < n_samples; ++s) {
    dp.append(std::move(by_sample[s]), counts[s]);
    by_sample[s] = {};
  }
  return dp;
}

/// Weighted share of each group's patients in each state at the grid times.
/// Rows occupy [time_start, time_stop); after a final death row the patient
/// is dead, and a final censored row also covers its own time_stop.
inline StateProbs sim_stateprobs_indiv(const DiseaseProgress& dp, const std::vector<double>& t_grid) {
  detail::require(!t_grid.empty(), "time grid is empty");
  for (size_t k = 0; k < t_grid.size(); ++k) {
    detail::require(t_grid[k] >= 0 && t_grid[k] <= dp.max_t(), "time grid must lie within [0, max_t]");
    if (k) detail::require(t_grid[k] > t_grid[k - 1], "time grid must be strictly increasing");
  }
  const auto& pat = dp.patients();
  StateProbs sp(dp.n_samples(), dp.n_strategies(), UnitInfo::groups(pat.grp_wt), dp.n_states(), t_grid);
  for (size_t s = 0; s < dp.n_samples(); ++s)
    for (size_t j = 0; j < dp.n_strategies(); ++j)
      for (size_t i = 0; i < dp.n_patients(); ++i) {
        const auto rows = dp.rows_of(dp.trajectory(s, j, i));
        const size_t g = static_cast<size_t>(pat.grp[i] - 1);
        size_t r = 0;
        for (size_t k = 0; k < t_grid.size(); ++k) {
          const double t = t_grid[k];
          while (r + 1 < rows.size() && t >= rows[r].time_stop) ++r;
          const auto& row = rows[r];
          int state = row.from;
          if (t >= row.time_stop && row.final && row.to != row.from) state = row.to;
          sp(s, j, g, static_cast<size_t>(state - 1), k) += pat.wt[i];
        }
      }
  return sp;
}

/// Present value of z over [t0, t1) at continuous rate r.
inline double discounted_length(double t0, double t1, double r) {
  if (r == 0) return t1 - t0;
  return std::exp(-r * t0) * -std::expm1(-r * (t1 - t0)) / r;
}

/// Exact discounted totals over each trajectory: occupancy intervals are
/// split at value-interval boundaries (measured from state entry when the
/// values use time_reset) and each piece contributes
/// z (e^{-r t_m} - e^{-r t_{m+1}}) / r. Results are averaged within groups.
inline ValueTotals sim_values_indiv(const DiseaseProgress& dp, const MeanValueParams& vals,
                                    const std::vector<double>& dr, std::string category = "value") {
  detail::require(vals.n_samples() >= dp.n_samples(), "state values have fewer samples than the simulation");
  detail::require(vals.n_strategies() == dp.n_strategies() && vals.n_patients() == dp.n_patients(),
                  "state values and simulation disagree on strategies or patients");
  detail::require(vals.n_states() + 1 == dp.n_states(), "state values are missing for some states (need " +
                                                            std::to_string(dp.n_states() - 1) + ")");
  for (double r : dr) {
    detail::require(std::isfinite(r), "discount rates must be finite");
    if (r < 0) throw ValidationError("discount rate must be nonnegative");
  }
  const auto& pat = dp.patients();
  const auto& ts = vals.time_starts();
  ValueTotals out(std::move(category), dr, dp.n_samples(), dp.n_strategies(), UnitInfo::groups(pat.grp_wt),
                  dp.n_states());
  for (size_t s = 0; s < dp.n_samples(); ++s)
    for (size_t j = 0; j < dp.n_strategies(); ++j)
      for (size_t i = 0; i < dp.n_patients(); ++i) {
        const size_t g = static_cast<size_t>(pat.grp[i] - 1);
        for (const auto& row : dp.rows_of(dp.trajectory(s, j, i))) {
          const size_t h = static_cast<size_t>(row.from - 1);
          if (row.time_stop <= row.time_start || static_cast<int>(h + 1) == dp.death_state()) continue;
          const double origin = vals.time_reset() ? row.time_start : 0.0;
          for (size_t m = 0; m < ts.size(); ++m) {
            const double a = std::max(row.time_start, origin + ts[m]);
            const double b =
                m + 1 < ts.size() ? std::min(row.time_stop, origin + ts[m + 1]) : row.time_stop;
            if (b <= a) continue;
            const double z = vals.value(s, j, i, h, m);
            for (size_t d = 0; d < dr.size(); ++d) out(d, s, j, g, h) += pat.wt[i] * z * discounted_length(a, b, dr[d]);
          }
        }
      }
  return out;
}

}  // namespace healthsim

#endif  // HEALTHSIM_INDIV_CTSTM_HPP
