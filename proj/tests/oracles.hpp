#ifndef HEALTHSIM_TESTS_ORACLES_HPP
#define HEALTHSIM_TESTS_ORACLES_HPP

// Closed-form references used across test files.

#include <array>
#include <cmath>

namespace oracle {

// Rates of the progressive 3-state model: stable -> progression (a),
// stable -> death (b), progression -> death (c).
inline constexpr double kA = 0.28, kB = 0.013, kC = 0.10;

/// Occupancy of states (1, 2, 3) at t when starting in state 1.
inline std::array<double, 3> three_state(double t, double a = kA, double b = kB, double c = kC) {
  const double p11 = std::exp(-(a + b) * t);
  const double p12 = a / (a + b - c) * (std::exp(-c * t) - std::exp(-(a + b) * t));
  return {p11, p12, 1.0 - p11 - p12};
}

/// Integral of e^{-rt} over [0, T].
inline double discounted_years(double r, double T) { return r == 0 ? T : (1.0 - std::exp(-r * T)) / r; }

}  // namespace oracle

#endif  // HEALTHSIM_TESTS_ORACLES_HPP
