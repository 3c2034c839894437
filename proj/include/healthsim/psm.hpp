#ifndef HEALTHSIM_PSM_HPP
#define HEALTHSIM_PSM_HPP

// N-state partitioned survival model: N-1 survival curves evaluated on a time
// grid and partitioned into state probabilities.

#include <algorithm>
#include <string>
#include <vector>

#include "healthsim/coefs.hpp"
#include "healthsim/core_data.hpp"
#include "healthsim/error.hpp"
#include "healthsim/indiv_ctstm.hpp"
#include "healthsim/outputs.hpp"
#include "healthsim/parallel.hpp"
#include "healthsim/survival_dists.hpp"

namespace healthsim {

/// Survival probabilities laid out (sample, strategy, patient, curve, time).
class SurvivalCurves {
 public:
  SurvivalCurves() = default;
  SurvivalCurves(size_t n_samples, size_t n_strategies, UnitInfo patients, size_t n_curves, std::vector<double> times)
      : n_samples_(n_samples),
        n_strategies_(n_strategies),
        n_curves_(n_curves),
        patients_(std::move(patients)),
        times_(std::move(times)),
        surv_(n_samples * n_strategies * patients_.size() * n_curves * times_.size(), 1.0) {}

  size_t n_samples() const { return n_samples_; }
  size_t n_strategies() const { return n_strategies_; }
  size_t n_patients() const { return patients_.size(); }
  size_t n_curves() const { return n_curves_; }
  const std::vector<double>& times() const { return times_; }
  const UnitInfo& patients() const { return patients_; }

  size_t index(size_t s, size_t j, size_t i, size_t c, size_t t) const {
    return (((s * n_strategies_ + j) * patients_.size() + i) * n_curves_ + c) * times_.size() + t;
  }
  double operator()(size_t s, size_t j, size_t i, size_t c, size_t t) const { return surv_[index(s, j, i, c, t)]; }
  double& operator()(size_t s, size_t j, size_t i, size_t c, size_t t) { return surv_[index(s, j, i, c, t)]; }

  void write_csv(const std::string& path) const {
    csv::Writer w(path, {"sample", "strategy_id", "patient_id", "grp_id", "patient_wt", "curve", "t", "survival"});
    for (size_t s = 0; s < n_samples_; ++s)
      for (size_t j = 0; j < n_strategies_; ++j)
        for (size_t i = 0; i < patients_.size(); ++i)
          for (size_t c = 0; c < n_curves_; ++c)
            for (size_t t = 0; t < times_.size(); ++t)
              w.row(s + 1, j + 1, patients_.id[i], patients_.grp[i], patients_.wt[i], c + 1, times_[t],
                    (*this)(s, j, i, c, t));
  }

 private:
  size_t n_samples_ = 0, n_strategies_ = 0, n_curves_ = 0;
  UnitInfo patients_;
  std::vector<double> times_;
  std::vector<double> surv_;
};

/// Evaluate each curve's survival function at every grid time for every
/// (sample, strategy, patient).
inline SurvivalCurves sim_survival(const std::vector<SurvivalParams>& curves, const InputData& input,
                                   const std::vector<double>& t_grid, size_t n_samples, unsigned threads = 1) {
  detail::require(!curves.empty(), "partitioned survival model needs at least one survival curve");
  detail::require(!t_grid.empty(), "time grid is empty");
  for (size_t k = 0; k < t_grid.size(); ++k) {
    detail::require(t_grid[k] >= 0, "time grid must be nonnegative");
    if (k) detail::require(t_grid[k] > t_grid[k - 1], "time grid must be strictly increasing");
  }
  std::vector<SurvivalPredictor> preds;
  for (size_t c = 0; c < curves.size(); ++c) {
    detail::require(curves[c].n_samples() >= n_samples, "curve " + std::to_string(c + 1) + " has " +
                                                            std::to_string(curves[c].n_samples()) +
                                                            " coefficient samples but " + std::to_string(n_samples) +
                                                            " were requested");
    preds.emplace_back(curves[c], input);
  }
  SurvivalCurves sc(n_samples, input.n_strategies(), patient_units(input), curves.size(), t_grid);
  parallel_for(n_samples, threads, [&](size_t s) {
    for (size_t row = 0; row < input.size(); ++row) {
      const auto& in = input.row(row);
      for (size_t c = 0; c < curves.size(); ++c) {
        const Distribution d = preds[c].predict(s, row);
        for (size_t k = 0; k < t_grid.size(); ++k)
          sc(s, in.strategy_index, in.patient_index, c, k) = dist_eval(d, DistFn::survival, t_grid[k]);
      }
    }
  });
  return sc;
}

struct PsmStateProbs {
  StateProbs probs;
  size_t crossings = 0;  // grid points where a curve exceeded the next one
};

/// p_1 = S_1, p_n = S_n - S_{n-1}, p_N = 1 - S_{N-1}. Curves that cross are
/// made consistent by capping each curve at the next one (working down from
/// overall survival), so the state squeezed out gets probability 0; each
/// capped point is counted.
inline PsmStateProbs stateprobs_from_survival(const SurvivalCurves& sc) {
  const size_t nc = sc.n_curves(), nt = sc.times().size();
  PsmStateProbs out{StateProbs(sc.n_samples(), sc.n_strategies(), sc.patients(), nc + 1, sc.times()), 0};
  std::vector<double> s(nc);
  for (size_t smp = 0; smp < sc.n_samples(); ++smp)
    for (size_t j = 0; j < sc.n_strategies(); ++j)
      for (size_t i = 0; i < sc.n_patients(); ++i)
        for (size_t k = 0; k < nt; ++k) {
          for (size_t c = 0; c < nc; ++c) {
            const double v = sc(smp, j, i, c, k);
            if (!(v >= -1e-9 && v <= 1 + 1e-9))
              throw ComputationError("survival probability " + csv::format(v) + " outside [0, 1]");
            s[c] = std::clamp(v, 0.0, 1.0);
          }
          for (size_t c = nc - 1; c-- > 0;) {
            if (s[c] > s[c + 1]) {
              s[c] = s[c + 1];
              ++out.crossings;
            }
          }
          auto& p = out.probs;
          p(smp, j, i, 0, k) = s[0];
          for (size_t c = 1; c < nc; ++c) p(smp, j, i, c, k) = s[c] - s[c - 1];
          p(smp, j, i, nc, k) = 1.0 - s[nc - 1];
        }
  return out;
}

}  // namespace healthsim

#endif  // HEALTHSIM_PSM_HPP
