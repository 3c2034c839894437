#ifndef HEALTHSIM_TRANSPROBS_HPP
#define HEALTHSIM_TRANSPROBS_HPP

// Arrays of transition probability matrices indexed by
// (sample, strategy, patient[, time interval]) and the ways of building them:
// matrix exponentials of intensity matrices, relative risks and multinomial
// logit predictions.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "healthsim/coefs.hpp"
#include "healthsim/core_data.hpp"
#include "healthsim/error.hpp"
#include "healthsim/expm.hpp"

namespace healthsim {

struct TransProbId {
  int sample = 1;  // 1-based
  int strategy_id = 0;
  int patient_id = 0;
  int grp_id = 1;
  double patient_wt = 1.0;
  double time_start = 0.0;
};

/// Identifiers for a full array of matrices: sample outermost, then the
/// (strategy, patient) input rows, then time interval innermost.
inline std::vector<TransProbId> tpmatrix_id(const InputData& input, size_t n_samples,
                                            const std::vector<double>& time_starts = {0.0}) {
  detail::require(!time_starts.empty() && time_starts.front() == 0.0,
                  "no transition matrix covering time t = 0 (the first interval must start at 0)");
  for (size_t m = 1; m < time_starts.size(); ++m)
    detail::require(time_starts[m] > time_starts[m - 1], "interval start times must be strictly increasing");
  std::vector<TransProbId> ids;
  ids.reserve(n_samples * input.size() * time_starts.size());
  for (size_t s = 0; s < n_samples; ++s)
    for (const auto& r : input.rows())
      for (double t0 : time_starts)
        ids.push_back({static_cast<int>(s + 1), r.strategy_id, r.patient_id, r.grp_id, r.patient_wt, t0});
  return ids;
}

class TransProbArray {
 public:
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;

  TransProbArray() = default;

  /// Zero-filled array for every (sample, input row, interval).
  TransProbArray(const InputData& input, size_t n_samples, size_t n_health_states,
                 std::vector<double> time_starts = {0.0})
      : n_states_(n_health_states),
        n_samples_(n_samples),
        n_strategies_(input.n_strategies()),
        n_patients_(input.n_patients()),
        time_starts_(std::move(time_starts)),
        ids_(tpmatrix_id(input, n_samples, time_starts_)),
        data_(ids_.size() * n_health_states * n_health_states, 0.0) {}

  size_t n_states() const { return n_states_; }
  size_t n_samples() const { return n_samples_; }
  size_t n_strategies() const { return n_strategies_; }
  size_t n_patients() const { return n_patients_; }
  size_t n_intervals() const { return time_starts_.size(); }
  size_t n_matrices() const { return ids_.size(); }
  const std::vector<double>& time_starts() const { return time_starts_; }
  const std::vector<TransProbId>& ids() const { return ids_; }

  size_t index(size_t sample, size_t strategy, size_t patient, size_t interval = 0) const {
    return ((sample * n_strategies_ + strategy) * n_patients_ + patient) * n_intervals() + interval;
  }

  MatrixMap matrix(size_t k) {
    return MatrixMap(data_.data() + k * n_states_ * n_states_, static_cast<Eigen::Index>(n_states_),
                     static_cast<Eigen::Index>(n_states_));
  }
  ConstMatrixMap matrix(size_t k) const {
    return ConstMatrixMap(data_.data() + k * n_states_ * n_states_, static_cast<Eigen::Index>(n_states_),
                          static_cast<Eigen::Index>(n_states_));
  }

  /// Interval whose [start, next start) contains t.
  size_t interval_at(double t) const {
    auto it = std::upper_bound(time_starts_.begin(), time_starts_.end(), t);
    if (it == time_starts_.begin())
      throw ValidationError("no transition matrix covering time t = " + std::to_string(t));
    return static_cast<size_t>(it - time_starts_.begin()) - 1;
  }

  /// Rows sum to 1 within tol, entries lie in [0, 1] and the final (death)
  /// row is absorbing.
  void validate(double tol = 1e-9) const {
    for (size_t k = 0; k < n_matrices(); ++k) {
      auto m = matrix(k);
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        double sum = 0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          const double v = m(r, c);
          if (!(v >= 0 && v <= 1))
            throw ValidationError("transition matrix " + std::to_string(k + 1) + " has an entry outside [0, 1]");
          sum += v;
        }
        if (std::abs(sum - 1) > tol)
          throw ValidationError("transition matrix " + std::to_string(k + 1) + " row " + std::to_string(r + 1) +
                                " sums to " + std::to_string(sum));
      }
      const Eigen::Index last = m.rows() - 1;
      if (std::abs(m(last, last) - 1.0) > tol)
        throw ValidationError("transition matrix " + std::to_string(k + 1) + ": death row must be absorbing");
    }
  }

 private:
  size_t n_states_ = 0, n_samples_ = 0, n_strategies_ = 0, n_patients_ = 0;
  std::vector<double> time_starts_;
  std::vector<TransProbId> ids_;
  std::vector<double> data_;
};

/// Copy matrices predicted for a single reference strategy to every strategy
/// of `input` (patients and samples must line up).
inline TransProbArray replicate_strategies(const TransProbArray& base, const InputData& input) {
  detail::require(base.n_strategies() == 1, "replicate_strategies: base array must hold a single strategy");
  detail::require(base.n_patients() == input.n_patients(), "replicate_strategies: patient count mismatch");
  TransProbArray out(input, base.n_samples(), base.n_states(), base.time_starts());
  for (size_t s = 0; s < base.n_samples(); ++s)
    for (size_t j = 0; j < input.n_strategies(); ++j)
      for (size_t i = 0; i < input.n_patients(); ++i)
        for (size_t m = 0; m < base.n_intervals(); ++m) out.matrix(out.index(s, j, i, m)) = base.matrix(base.index(s, 0, i, m));
  return out;
}

/// Multiply the (row, col) entries named in `index` (1-based) by relative
/// risks and rebuild each adjusted row's complement entry as one minus the
/// rest of the row. `rr` has one row per matrix (ordered like xbeta output)
/// and one column per index pair. The complement defaults to the diagonal.
inline TransProbArray apply_rr(const TransProbArray& p, const Eigen::MatrixXd& rr,
                               const std::vector<std::pair<int, int>>& index,
                               std::optional<std::vector<int>> complement = std::nullopt) {
  const int h = static_cast<int>(p.n_states());
  detail::require(static_cast<size_t>(rr.rows()) == p.n_matrices(),
                  "apply_rr: relative risks need one row per matrix (" + std::to_string(p.n_matrices()) + ")");
  detail::require(static_cast<size_t>(rr.cols()) == index.size(), "apply_rr: one relative-risk column per index pair");
  std::vector<int> comp(static_cast<size_t>(h));
  if (complement) {
    detail::require(complement->size() == static_cast<size_t>(h), "apply_rr: complement needs one column per row");
    comp = *complement;
  } else {
    for (int r = 0; r < h; ++r) comp[static_cast<size_t>(r)] = r + 1;
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [r, c] : index) {
    detail::require(r >= 1 && r <= h && c >= 1 && c <= h, "apply_rr: index out of range");
    detail::require(seen.insert({r, c}).second, "apply_rr: duplicate index pair");
    detail::require(comp[static_cast<size_t>(r - 1)] != c,
                    "apply_rr: entry (" + std::to_string(r) + "," + std::to_string(c) + ") is its row's complement");
  }

  TransProbArray out = p;
  std::vector<int> rows;
  for (const auto& [r, c] : index)
    if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
  for (size_t k = 0; k < p.n_matrices(); ++k) {
    auto m = out.matrix(k);
    for (size_t q = 0; q < index.size(); ++q) {
      const double f = rr(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(q));
      detail::require(f >= 0 && std::isfinite(f), "apply_rr: relative risks must be nonnegative and finite");
      m(index[q].first - 1, index[q].second - 1) *= f;
    }
    for (int r : rows) {
      const int cc = comp[static_cast<size_t>(r - 1)] - 1;
      double others = 0;
      for (int c = 0; c < h; ++c)
        if (c != cc) others += m(r - 1, c);
      double v = 1.0 - others;
      if (v < -1e-9) throw ComputationError("relative risk makes row infeasible (matrix " + std::to_string(k + 1) +
                                            ", row " + std::to_string(r) + ")");
      m(r - 1, cc) = std::max(v, 0.0);
    }
  }
  return out;
}

/// Exponential transition-intensity models (one per transition number)
/// turned into transition probability matrices Exp(u Q) for every sample and
/// input row.
inline TransProbArray transprobs_from_intensity(const std::vector<SurvivalParams>& per_transition,
                                                const TransitionMatrix& tmat, const InputData& input,
                                                size_t n_samples, double cycle_length) {
  detail::require(per_transition.size() == tmat.n_transitions(),
                  "intensity model needs one exponential model per transition (" +
                      std::to_string(tmat.n_transitions()) + ")");
  std::vector<SurvivalPredictor> preds;
  for (size_t t = 0; t < per_transition.size(); ++t) {
    detail::require(per_transition[t].family == Family::exponential,
                    "intensity model for transition " + std::to_string(t + 1) + " must be exponential");
    detail::require(per_transition[t].n_samples() >= n_samples,
                    "transition " + std::to_string(t + 1) + " has fewer coefficient samples than requested");
    preds.emplace_back(per_transition[t], input);
  }
  const size_t h = tmat.n_states();
  TransProbArray out(input, n_samples, h);
  Eigen::MatrixXd q(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(h));
  for (size_t s = 0; s < n_samples; ++s)
    for (size_t row = 0; row < input.size(); ++row) {
      q.setZero();
      for (size_t t = 1; t <= tmat.n_transitions(); ++t) {
        const double rate = preds[t - 1].predict(s, row).param(0);
        const int from = tmat.from(static_cast<int>(t)) - 1, to = tmat.to(static_cast<int>(t)) - 1;
        q(from, to) = rate;
        q(from, from) -= rate;
      }
      out.matrix(s * input.size() + row) = expmat(q, cycle_length);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Multinomial logit transition models

/// Multinomial logistic regression for the transitions out of one state.
/// Categories are destination state ids (including staying put); the
/// reference category has its linear predictor pinned at 0.
struct MlogitParams {
  int from_state = 1;
  std::vector<int> categories;
  size_t reference = 0;
  std::vector<std::string> terms;
  std::vector<RowMatrix> coefs;  // one n_samples x n_terms matrix per non-reference category

  size_t n_samples() const { return coefs.empty() ? 0 : static_cast<size_t>(coefs.front().rows()); }

  void validate() const {
    detail::require(categories.size() >= 2, "mlogit: need at least two categories");
    detail::require(reference < categories.size(), "mlogit: reference category out of range");
    detail::require(coefs.size() == categories.size() - 1, "mlogit: need one coefficient matrix per non-reference category");
    for (const auto& c : coefs) {
      detail::require(static_cast<size_t>(c.cols()) == terms.size(), "mlogit: coefficient width must match terms");
      detail::require(c.rows() == coefs.front().rows(), "mlogit: categories disagree on the number of samples");
    }
  }
};

/// Category probabilities for covariate row `x` (aligned with mp.terms).
inline std::vector<double> predict_mlogit(const MlogitParams& mp, std::span<const double> x, size_t sample) {
  mp.validate();
  detail::require(x.size() == mp.terms.size(), "predict_mlogit: covariate row has " + std::to_string(x.size()) +
                                                   " values but the model has " + std::to_string(mp.terms.size()) +
                                                   " terms");
  detail::require(sample < mp.n_samples(), "predict_mlogit: sample out of range");
  const size_t k = mp.categories.size();
  std::vector<double> lp(k, 0.0);
  size_t m = 0;
  for (size_t c = 0; c < k; ++c) {
    if (c == mp.reference) continue;
    double v = 0;
    for (size_t j = 0; j < x.size(); ++j) v += x[j] * mp.coefs[m](static_cast<Eigen::Index>(sample), static_cast<Eigen::Index>(j));
    lp[c] = v;
    ++m;
  }
  const double mx = *std::max_element(lp.begin(), lp.end());
  double total = 0;
  for (double& v : lp) total += (v = std::exp(v - mx));
  for (double& v : lp) v /= total;
  return lp;
}

/// Transition probability matrices from one multinomial logit per
/// non-absorbing state. Each model's categories must be the state itself plus
/// its permitted destinations.
inline TransProbArray transprobs_from_mlogit(const std::vector<MlogitParams>& models, const TransitionMatrix& tmat,
                                             const InputData& input, size_t n_samples) {
  const size_t h = tmat.n_states();
  std::vector<const MlogitParams*> by_state(h + 1, nullptr);
  for (const auto& m : models) {
    m.validate();
    detail::require(m.from_state >= 1 && static_cast<size_t>(m.from_state) < h, "mlogit: invalid from state");
    std::vector<int> expected{m.from_state};
    for (int t : tmat.transitions_from(m.from_state)) expected.push_back(tmat.to(t));
    std::sort(expected.begin(), expected.end());
    std::vector<int> got = m.categories;
    std::sort(got.begin(), got.end());
    detail::require(got == expected, "mlogit categories for state " + std::to_string(m.from_state) +
                                         " must be the state itself plus its permitted destinations");
    detail::require(m.n_samples() >= n_samples, "mlogit: fewer coefficient samples than requested");
    by_state[static_cast<size_t>(m.from_state)] = &m;
  }
  std::vector<RowMatrix> x(h + 1);
  for (size_t r = 1; r <= h; ++r) {
    if (tmat.is_absorbing(static_cast<int>(r))) continue;
    detail::require(by_state[r] != nullptr, "no multinomial logit model for state " + std::to_string(r));
    x[r] = design_matrix(input, by_state[r]->terms);
  }
  TransProbArray out(input, n_samples, h);
  for (size_t s = 0; s < n_samples; ++s)
    for (size_t row = 0; row < input.size(); ++row) {
      auto p = out.matrix(s * input.size() + row);
      for (size_t r = 1; r <= h; ++r) {
        if (tmat.is_absorbing(static_cast<int>(r))) {
          p(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(r - 1)) = 1.0;
          continue;
        }
        const auto& m = *by_state[r];
        auto xr = x[r].row(static_cast<Eigen::Index>(row));
        auto probs = predict_mlogit(m, std::span<const double>(xr.data(), static_cast<size_t>(xr.size())), s);
        for (size_t c = 0; c < m.categories.size(); ++c)
          p(static_cast<Eigen::Index>(r - 1), m.categories[c] - 1) = probs[c];
      }
    }
  return out;
}

}  // namespace healthsim

#endif  // HEALTHSIM_TRANSPROBS_HPP
