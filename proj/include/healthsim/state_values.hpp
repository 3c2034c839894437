#ifndef HEALTHSIM_STATE_VALUES_HPP
#define HEALTHSIM_STATE_VALUES_HPP

// Predicted mean state values (utilities, costs) for every
// (sample, strategy, patient, state, time interval) and point lookups into
// them.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "healthsim/core_data.hpp"
#include "healthsim/error.hpp"

namespace healthsim {

enum class TimeOrigin { model, state_entry };

/// Dense-or-broadcast value array. A dimension with stride 0 is broadcast:
/// every index along it reads the same stored value. The death state
/// (index n_states) always has value 0 and is not stored.
class MeanValueParams {
 public:
  enum Dim { kSample = 0, kStrategy, kPatient, kState, kInterval };

  MeanValueParams() = default;

  /// `varies[d]` selects which dimensions are stored; values are laid out
  /// row-major over the stored dimensions in (sample, strategy, patient,
  /// state, interval) order.
  MeanValueParams(std::array<size_t, 5> dims, std::array<bool, 5> varies, std::vector<double> time_starts,
                  bool time_reset)
      : dims_(dims), time_starts_(std::move(time_starts)), time_reset_(time_reset) {
    detail::require(!time_starts_.empty() && time_starts_.front() == 0.0, "value intervals must start at 0");
    for (size_t m = 1; m < time_starts_.size(); ++m)
      detail::require(time_starts_[m] > time_starts_[m - 1], "value interval starts must be strictly increasing");
    detail::require(dims_[kInterval] == time_starts_.size(), "interval dimension must match time_starts");
    size_t stride = 1;
    for (int d = 4; d >= 0; --d) {
      const auto du = static_cast<size_t>(d);
      if (varies[du] && dims_[du] > 1) {
        strides_[du] = stride;
        stride *= dims_[du];
      } else {
        strides_[du] = 0;
      }
    }
    values_.assign(stride, 0.0);
  }

  /// The same value everywhere (e.g. 1 for life-years).
  static MeanValueParams constant(double value, size_t n_samples, size_t n_strategies, size_t n_patients,
                                  size_t n_states) {
    MeanValueParams mv({n_samples, n_strategies, n_patients, n_states, 1}, {false, false, false, false, false}, {0.0},
                       false);
    mv.values_[0] = value;
    return mv;
  }

  size_t n_samples() const { return dims_[kSample]; }
  size_t n_strategies() const { return dims_[kStrategy]; }
  size_t n_patients() const { return dims_[kPatient]; }
  size_t n_states() const { return dims_[kState]; }
  size_t n_intervals() const { return dims_[kInterval]; }
  const std::vector<double>& time_starts() const { return time_starts_; }
  bool time_reset() const { return time_reset_; }
  bool broadcast(Dim d) const { return strides_[d] == 0; }
  size_t stored_size() const { return values_.size(); }

  size_t offset(size_t sample, size_t strategy, size_t patient, size_t state, size_t interval) const {
    return sample * strides_[kSample] + strategy * strides_[kStrategy] + patient * strides_[kPatient] +
           state * strides_[kState] + interval * strides_[kInterval];
  }

  double value(size_t sample, size_t strategy, size_t patient, size_t state, size_t interval) const {
    if (state == n_states()) return 0.0;
    return values_[offset(sample, strategy, patient, state, interval)];
  }
  double& at(size_t sample, size_t strategy, size_t patient, size_t state, size_t interval) {
    return values_[offset(sample, strategy, patient, state, interval)];
  }

  /// Interval containing t (left-closed); times past the last start use the
  /// last interval.
  size_t interval_at(double t) const {
    auto it = std::upper_bound(time_starts_.begin(), time_starts_.end(), t);
    return it == time_starts_.begin() ? 0 : static_cast<size_t>(it - time_starts_.begin()) - 1;
  }

  void validate() const {
    for (double v : values_)
      detail::require(std::isfinite(v), "state values must be finite");
  }

 private:
  std::array<size_t, 5> dims_{};
  std::array<size_t, 5> strides_{};
  std::vector<double> time_starts_{0.0};
  bool time_reset_ = false;
  std::vector<double> values_;
};

/// All indices are 0-based positions; state n_states is death.
struct ValueQuery {
  size_t sample = 0;
  size_t strategy = 0;
  size_t patient = 0;
  size_t state = 0;
  double time = 0.0;
  TimeOrigin time_origin = TimeOrigin::model;
};

inline double predict_stateval(const MeanValueParams& mv, const ValueQuery& q) {
  auto in_range = [](size_t v, size_t n, const char* what) {
    if (v >= n) throw ValidationError(std::string("predict_stateval: ") + what + " index " + std::to_string(v) +
                                      " out of range (" + std::to_string(n) + ")");
  };
  in_range(q.sample, mv.n_samples(), "sample");
  in_range(q.strategy, mv.n_strategies(), "strategy");
  in_range(q.patient, mv.n_patients(), "patient");
  in_range(q.state, mv.n_states() + 1, "state");
  detail::require(q.time >= 0, "predict_stateval: time must be nonnegative");
  if (mv.n_intervals() > 1) {
    const TimeOrigin expected = mv.time_reset() ? TimeOrigin::state_entry : TimeOrigin::model;
    detail::require(q.time_origin == expected, mv.time_reset()
                                                   ? "values are defined on time since state entry"
                                                   : "values are defined on model time");
  }
  return mv.value(q.sample, q.strategy, q.patient, q.state, mv.interval_at(q.time));
}

}  // namespace healthsim

#endif  // HEALTHSIM_STATE_VALUES_HPP
