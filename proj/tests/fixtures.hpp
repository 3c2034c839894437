#ifndef HEALTHSIM_TESTS_FIXTURES_HPP
#define HEALTHSIM_TESTS_FIXTURES_HPP

// Small model inputs shared by the test files.

#include <cmath>
#include <vector>

#include "healthsim/parameters.hpp"
#include "oracles.hpp"

namespace fixture {

/// `n_strategies` x `n_patients` with unit weights and one group.
inline healthsim::ModelContext context(int n_strategies, int n_patients, int n_states = 2) {
  healthsim::StrategyTable s;
  for (int j = 1; j <= n_strategies; ++j) s.strategy_id.push_back(j);
  healthsim::PatientTable p;
  for (int i = 1; i <= n_patients; ++i) p.patient_id.push_back(i);
  healthsim::StateTable h;
  for (int k = 1; k <= n_states; ++k) h.state_id.push_back(k);
  return healthsim::ModelContext(s, p, h);
}

/// 1 -> 2, 1 -> 3, 2 -> 3.
inline healthsim::TransitionMatrix illness_death() { return healthsim::TransitionMatrix(3, {0, 1, 2, 0, 0, 3, 0, 0, 0}); }

inline std::vector<healthsim::SurvivalParams> exponential_rates(std::vector<double> rates, size_t n_samples) {
  std::vector<healthsim::SurvivalParams> out;
  for (double r : rates)
    out.push_back(healthsim::fixed_survival_params(healthsim::Family::exponential,
                                                   {{{"(Intercept)", std::log(r)}}}, n_samples));
  return out;
}

inline std::vector<healthsim::SurvivalParams> three_state_rates(size_t n_samples = 1) {
  return exponential_rates({oracle::kA, oracle::kB, oracle::kC}, n_samples);
}

}  // namespace fixture

#endif  // HEALTHSIM_TESTS_FIXTURES_HPP
