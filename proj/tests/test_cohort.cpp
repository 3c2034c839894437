#include <catch_amalgamated.hpp>

#include <cmath>

#include "healthsim/cohort_dtstm.hpp"
#include "fixtures.hpp"

using namespace healthsim;

namespace {

/// One strategy, one patient, the same matrix for every sample.
TransProbArray constant_array(const Eigen::MatrixXd& p, size_t n_samples = 1, std::vector<double> starts = {0.0}) {
  const auto h = static_cast<size_t>(p.rows());
  TransProbArray tp(expand(fixture::context(1, 1, static_cast<int>(h) - 1)), n_samples, h, starts);
  for (size_t k = 0; k < tp.n_matrices(); ++k) tp.matrix(k) = p;
  return tp;
}

TransProbArray three_state_array(double u, size_t n_samples = 1) {
  return transprobs_from_intensity(fixture::three_state_rates(n_samples), fixture::illness_death(),
                                   expand(fixture::context(1, 1)), n_samples, u);
}

double state_sum(const StateProbs& sp, size_t s, size_t t) {
  double sum = 0;
  for (size_t h = 0; h < sp.n_states(); ++h) sum += sp(s, 0, 0, h, t);
  return sum;
}

/// Integral of the analytic state-2 occupancy times e^{-rt} over [0, T].
double progression_years(double r, double T) {
  using namespace oracle;
  const double k = kA / (kA + kB - kC);
  return k * (oracle::discounted_years(kC + r, T) - oracle::discounted_years(kA + kB + r, T));
}

}  // namespace

TEST_CASE("two cycles by hand") {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0, 1;
  auto sp = sim_stateprobs_cohort(constant_array(p), {1.0, 2, Integration::trapezoid});
  CHECK(sp(0, 0, 0, 0, 2) == Catch::Approx(0.81).epsilon(1e-14));
  CHECK(sp(0, 0, 0, 1, 2) == Catch::Approx(0.19).epsilon(1e-14));
  CHECK(sp.times() == std::vector<double>{0.0, 1.0, 2.0});
}

TEST_CASE("identity matrix keeps the initial distribution") {
  auto sp = sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(3, 3)), {0.5, 10, Integration::left},
                                  std::vector<double>{0.2, 0.3, 0.5});
  for (size_t t = 0; t <= 10; ++t) {
    CHECK(sp(0, 0, 0, 0, t) == 0.2);
    CHECK(sp(0, 0, 0, 1, t) == 0.3);
    CHECK(sp(0, 0, 0, 2, t) == 0.5);
  }
  CHECK_THROWS_AS(sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(3, 3)), {}, std::vector<double>{0.2, 0.3}),
                  ValidationError);
  CHECK_THROWS_AS(sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(3, 3)), {},
                                        std::vector<double>{0.2, 0.3, 0.4}),
                  ValidationError);
  CHECK_THROWS_AS(sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(3, 3)), {0.0, 1}), ValidationError);
}

TEST_CASE("matches the analytic three-state occupancy") {
  auto sp = sim_stateprobs_cohort(three_state_array(0.25), {0.25, 80, Integration::trapezoid});
  for (size_t c = 0; c <= 80; ++c) {
    const auto ref = oracle::three_state(0.25 * static_cast<double>(c));
    for (size_t h = 0; h < 3; ++h) CHECK(std::abs(sp(0, 0, 0, h, c) - ref[h]) < 1e-8);
  }
  auto fine = sim_stateprobs_cohort(three_state_array(0.01), {0.01, 1000, Integration::trapezoid});
  for (size_t c : {100u, 500u, 1000u}) {
    const auto ref = oracle::three_state(0.01 * static_cast<double>(c));
    for (size_t h = 0; h < 3; ++h) CHECK(std::abs(fine(0, 0, 0, h, c) - ref[h]) < 1e-3);
  }
}

TEST_CASE("time-varying matrices") {
  Eigen::MatrixXd alive = Eigen::MatrixXd::Identity(2, 2), die(2, 2);
  die << 0.5, 0.5, 0, 1;
  auto tp = constant_array(alive, 1, {0.0, 2.0});
  tp.matrix(tp.index(0, 0, 0, 1)) = die;
  auto sp = sim_stateprobs_cohort(tp, {1.0, 4});
  CHECK(sp(0, 0, 0, 0, 2) == 1.0);
  CHECK(sp(0, 0, 0, 0, 3) == 0.5);
  CHECK(sp(0, 0, 0, 0, 4) == 0.25);

  CHECK_THROWS_WITH(constant_array(alive, 1, {1.0}), Catch::Matchers::ContainsSubstring("no transition matrix covering time t"));
}

TEST_CASE("integration rules") {
  // p(t) = t on a two-cycle grid over [0, 1].
  StateProbs sp(1, 1, UnitInfo::patients({1}, {1}, {1.0}), 2, {0.0, 0.5, 1.0});
  for (size_t k = 0; k < 3; ++k) {
    sp(0, 0, 0, 0, k) = sp.times()[k];
    sp(0, 0, 0, 1, k) = 1 - sp.times()[k];
  }
  const auto one = MeanValueParams::constant(1.0, 1, 1, 1, 1);
  CHECK(integrate_statevals(sp, one, {0.0}, Integration::left)(0, 0, 0, 0, 0) == Catch::Approx(0.25));
  CHECK(integrate_statevals(sp, one, {0.0}, Integration::right)(0, 0, 0, 0, 0) == Catch::Approx(0.75));
  CHECK(integrate_statevals(sp, one, {0.0}, Integration::trapezoid)(0, 0, 0, 0, 0) == Catch::Approx(0.5));
  CHECK(integrate_statevals(sp, one, {0.0}, Integration::trapezoid)(0, 0, 0, 0, 1) == 0.0);  // death

  CHECK_THROWS_AS(integrate_statevals(sp, MeanValueParams::constant(1.0, 2, 1, 1, 1), {0.0}, Integration::left),
                  ValidationError);
  CHECK_THROWS_AS(integrate_statevals(sp, MeanValueParams::constant(1.0, 1, 1, 1, 2), {0.0}, Integration::left),
                  ValidationError);
  CHECK_THROWS_AS(integrate_statevals(sp, one, {-0.01}, Integration::left), ValidationError);
  CHECK_THROWS_AS(parse_integration("midpoint"), ValidationError);
  CHECK(parse_integration("right") == Integration::right);
}

TEST_CASE("unit integrand and discounting") {
  const auto one = MeanValueParams::constant(1.0, 1, 1, 1, 1);
  auto sp = sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(2, 2)), {1.0, 10});
  CHECK(integrate_statevals(sp, one, {0.0}, Integration::trapezoid)(0, 0, 0, 0, 0) == Catch::Approx(10.0).epsilon(1e-14));

  auto fine = sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(2, 2)), {1e-3, 1000});
  auto v = integrate_statevals(fine, one, {0.0, 0.03}, Integration::trapezoid);
  CHECK(std::abs(v(1, 0, 0, 0, 0) - oracle::discounted_years(0.03, 1.0)) < 1e-7);
  CHECK(std::abs(v(0, 0, 0, 0, 0) - 1.0) < 1e-12);
  CHECK(v.dr_index(0.03) == 1);
}

TEST_CASE("model-time value intervals") {
  MeanValueParams vals({1, 1, 1, 1, 2}, {false, false, false, false, true}, {0.0, 1.0}, false);
  vals.at(0, 0, 0, 0, 0) = 2.0;
  vals.at(0, 0, 0, 0, 1) = 5.0;
  auto sp = sim_stateprobs_cohort(constant_array(Eigen::MatrixXd::Identity(2, 2)), {0.5, 4});
  CHECK(integrate_statevals(sp, vals, {0.0}, Integration::left)(0, 0, 0, 0, 0) == Catch::Approx(2.0 + 5.0));
  MeanValueParams reset({1, 1, 1, 1, 2}, {false, false, false, false, true}, {0.0, 1.0}, true);
  CHECK_THROWS_AS(integrate_statevals(sp, reset, {0.0}, Integration::left), ValidationError);
}

TEST_CASE("trapezoid converges at second order") {
  const double r = 0.03, T = 10.0;
  const double exact = progression_years(r, T);
  std::vector<double> err;
  for (double u : {0.2, 0.1, 0.05, 0.025}) {
    const auto n = static_cast<size_t>(std::lround(T / u));
    auto sp = sim_stateprobs_cohort(three_state_array(u), {u, n});
    auto v = integrate_statevals(sp, MeanValueParams::constant(1.0, 1, 1, 1, 2), {r}, Integration::trapezoid);
    err.push_back(std::abs(v(0, 0, 0, 0, 1) - exact));
  }
  for (size_t k = 0; k + 1 < err.size(); ++k) CHECK(std::log2(err[k] / err[k + 1]) >= 1.9);
}

TEST_CASE("cohort properties over random models") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    CounterRng rng(seed);
    const double u = 0.1 + rng.uniform();
    const auto n = static_cast<size_t>(1 + 20 * rng.uniform());
    auto rates = fixture::exponential_rates({0.01 + rng.uniform(), 0.01 + 0.5 * rng.uniform(), 0.01 + rng.uniform()}, 2);
    auto tp = transprobs_from_intensity(rates, fixture::illness_death(), expand(fixture::context(2, 2)), 2, u);
    auto sp = sim_stateprobs_cohort(tp, {u, n}, std::nullopt, 2);
    for (size_t s = 0; s < 2; ++s)
      for (size_t t = 0; t <= n; ++t) {
        CHECK(std::abs(state_sum(sp, s, t) - 1) < 1e-8);
        if (t > 0) CHECK(sp(s, 1, 1, 2, t) >= sp(s, 1, 1, 2, t - 1));
      }
    const double r = 0.1 * rng.uniform();
    const auto ly = MeanValueParams::constant(1.0, 2, 2, 2, 2);
    auto left = integrate_statevals(sp, ly, {r}, Integration::left);
    auto right = integrate_statevals(sp, ly, {r}, Integration::right);
    auto trap = integrate_statevals(sp, ly, {r}, Integration::trapezoid);
    const double horizon = u * static_cast<double>(n);
    // Stable-state occupancy times the discount factor is decreasing.
    CHECK(right(0, 0, 0, 0, 0) <= trap(0, 0, 0, 0, 0) + 1e-12);
    CHECK(trap(0, 0, 0, 0, 0) <= left(0, 0, 0, 0, 0) + 1e-12);
    for (const auto* v : {&left, &right, &trap}) CHECK((*v)(0, 1, 0, 0, 0) + (*v)(0, 1, 0, 0, 1) <= horizon + 1e-12);
  }
}

TEST_CASE("threads do not change results") {
  auto tp = three_state_array(0.5, 50);
  auto a = sim_stateprobs_cohort(tp, {0.5, 20}, std::nullopt, 1);
  auto b = sim_stateprobs_cohort(tp, {0.5, 20}, std::nullopt, 4);
  for (size_t s = 0; s < 50; ++s)
    for (size_t t = 0; t <= 20; ++t) CHECK(a(s, 0, 0, 1, t) == b(s, 0, 0, 1, t));
}
