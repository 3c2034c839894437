#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "healthsim/rng.hpp"
#include "healthsim/survival_dists.hpp"

using namespace healthsim;

namespace {

std::vector<Distribution> all_families() {
  return {Distribution::exponential(0.3),   Distribution::weibull(1.7, 4.0),     Distribution::weibull(0.6, 2.0),
          Distribution::gompertz(0.12, 0.05), Distribution::gompertz(-0.3, 0.4), Distribution::lognormal(1.1, 0.8),
          Distribution::loglogistic(2.2, 3.0), Distribution::gamma(2.5, 0.7),     Distribution::gamma(0.6, 1.3)};
}

}  // namespace

TEST_CASE("closed-form evaluations") {
  CHECK(dist_eval(Distribution::weibull(1, 2), DistFn::quantile, 0.5) == Catch::Approx(2 * std::log(2.0)).epsilon(1e-12));
  CHECK(dist_eval(Distribution::exponential(0.25), DistFn::cumhazard, 4) == Catch::Approx(1.0).epsilon(1e-14));
  for (const auto& d : all_families()) CHECK(dist_eval(d, DistFn::survival, 0) == 1.0);
  CHECK(std::isinf(dist_eval(Distribution::gamma(2, 1), DistFn::quantile, 1.0)));
}

TEST_CASE("hazard identities hold for every family") {
  for (const auto& d : all_families())
    for (double t : {0.05, 0.5, 1.0, 2.5, 7.0}) {
      const double s = d.survival(t);
      CHECK(std::abs(s - std::exp(-d.cumhazard(t))) < 1e-10);
      CHECK(std::abs(d.hazard(t) - d.pdf(t) / s) < 1e-10 * std::max(1.0, d.hazard(t)));
    }
}

TEST_CASE("quantile inverts the survivor function") {
  for (const auto& d : all_families())
    for (double t : {0.1, 0.7, 1.5, 3.0, 6.0}) {
      const double p = 1 - d.survival(t);
      CHECK(std::abs(d.quantile(p) - t) < 1e-8);
    }
}

TEST_CASE("inverse-CDF sampling") {
  const double u = 1 - std::exp(-1.0);
  CHECK(dist_sample(Distribution::exponential(1), u) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(dist_sample(Distribution::weibull(2, 1), u) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(dist_sample(Distribution::weibull(2, 1), 1e-300) < 1e-100);
  CHECK_THROWS_AS(dist_sample(Distribution::weibull(2, 1), 0.0), ValidationError);
  CHECK_THROWS_AS(dist_sample(Distribution::weibull(2, 1), 1.0), ValidationError);
  for (const auto& d : all_families()) {
    double prev = 0;
    for (double v = 0.01; v < 1; v += 0.01) {
      const double t = dist_sample(d, v);
      CHECK((t > prev || (std::isinf(t) && std::isinf(prev))));
      prev = t;
    }
  }
}

TEST_CASE("truncated sampling") {
  const double u = 1 - std::exp(-1.0);
  CHECK(dist_sample_truncated(Distribution::weibull(2, 1), 1.0, u) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(dist_sample_truncated(Distribution::exponential(0.4), 3.0, 0.3) == 3.0 + dist_sample(Distribution::exponential(0.4), 0.3));
  for (const auto& d : all_families())
    for (double v : {0.01, 0.3, 0.77, 0.999}) {
      CHECK(dist_sample_truncated(d, 0.0, v) == dist_sample(d, v));
      const double t = dist_sample_truncated(d, 1.5, v);
      CHECK(t >= 1.5);
      if (std::isinf(t))  // cure fraction: the event never happens
        CHECK(1 - v <= d.survival(1e300) / d.survival(1.5));
      else
        CHECK(std::abs(d.survival(t) / d.survival(1.5) - (1 - v)) < 1e-8);
    }
  CHECK_THROWS_WITH(dist_sample_truncated(Distribution::weibull(2, 1), 40.0, 0.5),
                    Catch::Matchers::ContainsSubstring("truncation beyond support"));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Distribution::weibull(0, 1), ValidationError);
  CHECK_THROWS_AS(Distribution::lognormal(0, -1), ValidationError);
  CHECK_THROWS_AS(Distribution::gamma(1, 0), ValidationError);
  CHECK_THROWS_AS(Distribution::exponential(-1), ValidationError);
  CHECK(std::isinf(dist_sample(Distribution::exponential(0), 0.5)));
}

TEST_CASE("Kolmogorov-Smirnov against the analytic CDF") {
  const size_t n = 100000;
  CounterRng master(20240601);
  size_t f = 0;
  for (const auto& d : all_families()) {
    CounterRng rng = master.substream({f++});
    std::vector<double> x(n);
    for (auto& v : x) v = dist_sample(d, rng.uniform());
    std::sort(x.begin(), x.end());
    double ks = 0;
    for (size_t i = 0; i < n; ++i) {
      if (std::isinf(x[i])) break;  // mass at infinity (cure fraction)
      const double cdf = 1 - d.survival(x[i]);
      ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
    }
    INFO(family_name(d.family()));
    CHECK(ks < 0.01);
  }
}
