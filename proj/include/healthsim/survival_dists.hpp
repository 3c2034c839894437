#ifndef HEALTHSIM_SURVIVAL_DISTS_HPP
#define HEALTHSIM_SURVIVAL_DISTS_HPP

// Parametric survival distributions on the natural parameter scale.
//
//   exponential  {rate}          S(t) = exp(-rate t)
//   weibull      {shape, scale}  S(t) = exp(-(t/scale)^shape)
//   gompertz     {shape, rate}   H(t) = rate/shape (exp(shape t) - 1)
//   lognormal    {meanlog, sdlog}
//   loglogistic  {shape, scale}  S(t) = 1 / (1 + (t/scale)^shape)
//   gamma        {shape, rate}
//
// Sampling is by inversion of the survivor function, so a caller-supplied
// uniform fully determines the draw.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "healthsim/error.hpp"

namespace healthsim {

enum class Family { exponential, weibull, gompertz, lognormal, loglogistic, gamma };

enum class Link { identity, log };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::exponential: return "exponential";
    case Family::weibull: return "weibull";
    case Family::gompertz: return "gompertz";
    case Family::lognormal: return "lognormal";
    case Family::loglogistic: return "loglogistic";
    case Family::gamma: return "gamma";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  for (Family f : {Family::exponential, Family::weibull, Family::gompertz, Family::lognormal, Family::loglogistic,
                   Family::gamma})
    if (family_name(f) == s) return f;
  if (s == "exp") return Family::exponential;
  if (s == "lnorm") return Family::lognormal;
  if (s == "llogis") return Family::loglogistic;
  throw ValidationError("unknown survival distribution '" + std::string(s) + "'");
}

struct ParamSpec {
  std::string_view name;
  Link link;
};

/// Parameter names, in storage order, and the link used when the parameter
/// is predicted from covariates.
inline std::vector<ParamSpec> family_params(Family f) {
  switch (f) {
    case Family::exponential: return {{"rate", Link::log}};
    case Family::weibull: return {{"shape", Link::log}, {"scale", Link::log}};
    case Family::gompertz: return {{"shape", Link::identity}, {"rate", Link::log}};
    case Family::lognormal: return {{"meanlog", Link::identity}, {"sdlog", Link::log}};
    case Family::loglogistic: return {{"shape", Link::log}, {"scale", Link::log}};
    case Family::gamma: return {{"shape", Link::log}, {"rate", Link::log}};
  }
  return {};
}

inline double inverse_link(Link link, double lp) { return link == Link::log ? std::exp(lp) : lp; }

enum class DistFn { pdf, survival, hazard, cumhazard, quantile };

class Distribution {
 public:
  /// Parameters in family_params() order. Throws on invalid values.
  Distribution(Family family, std::array<double, 2> params) : family_(family), p_(params) { validate(); }

  static Distribution exponential(double rate) { return {Family::exponential, {rate, 0.0}}; }
  static Distribution weibull(double shape, double scale) { return {Family::weibull, {shape, scale}}; }
  static Distribution gompertz(double shape, double rate) { return {Family::gompertz, {shape, rate}}; }
  static Distribution lognormal(double meanlog, double sdlog) { return {Family::lognormal, {meanlog, sdlog}}; }
  static Distribution loglogistic(double shape, double scale) { return {Family::loglogistic, {shape, scale}}; }
  static Distribution gamma(double shape, double rate) { return {Family::gamma, {shape, rate}}; }

  Family family() const { return family_; }
  double param(size_t i) const { return p_[i]; }

  double survival(double t) const;
  double cumhazard(double t) const;
  double hazard(double t) const;
  double pdf(double t) const;
  /// Smallest t with F(t) >= p; +infinity at p = 1 or beyond the support.
  double quantile(double p) const;
  /// Inverse of the cumulative hazard; +infinity when H never reaches `h`.
  double cumhazard_inverse(double h) const;

 private:
  void validate() const;

  Family family_;
  std::array<double, 2> p_;
};

inline void Distribution::validate() const {
  auto pos = [&](double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v))
      throw ValidationError(std::string(family_name(family_)) + ": " + what + " must be positive and finite");
  };
  switch (family_) {
    case Family::exponential:
      // A zero rate is allowed and means the event never occurs.
      if (!(p_[0] >= 0) || !std::isfinite(p_[0]))
        throw ValidationError("exponential: rate must be nonnegative and finite");
      break;
    case Family::weibull:
    case Family::loglogistic:
      pos(p_[0], "shape");
      pos(p_[1], "scale");
      break;
    case Family::gompertz:
      if (!std::isfinite(p_[0])) throw ValidationError("gompertz: shape must be finite");
      pos(p_[1], "rate");
      break;
    case Family::lognormal:
      if (!std::isfinite(p_[0])) throw ValidationError("lognormal: meanlog must be finite");
      pos(p_[1], "sdlog");
      break;
    case Family::gamma:
      pos(p_[0], "shape");
      pos(p_[1], "rate");
      break;
  }
}

namespace detail {

inline double require_time(double t) {
  if (!(t >= 0)) throw ValidationError("survival functions require t >= 0");
  return t;
}

inline double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

inline double Distribution::cumhazard(double t) const {
  detail::require_time(t);
  const double a = p_[0], b = p_[1];
  switch (family_) {
    case Family::exponential: return a * t;
    case Family::weibull: return std::pow(t / b, a);
    case Family::gompertz: return a == 0 ? b * t : b / a * std::expm1(a * t);
    case Family::loglogistic: return std::log1p(std::pow(t / b, a));
    case Family::lognormal:
    case Family::gamma: return -std::log(survival(t));
  }
  return 0;
}

inline double Distribution::survival(double t) const {
  detail::require_time(t);
  const double a = p_[0], b = p_[1];
  switch (family_) {
    case Family::lognormal:
      if (t == 0) return 1.0;
      return detail::norm_sf((std::log(t) - a) / b);
    case Family::gamma:
      if (t == 0) return 1.0;
      return boost::math::gamma_q(a, b * t);
    case Family::loglogistic: return 1.0 / (1.0 + std::pow(t / b, a));
    default: return std::exp(-cumhazard(t));
  }
}

inline double Distribution::pdf(double t) const {
  detail::require_time(t);
  const double a = p_[0], b = p_[1];
  switch (family_) {
    case Family::lognormal: {
      if (t == 0) return 0.0;
      const double z = (std::log(t) - a) / b;
      return std::exp(-0.5 * z * z) / (t * b * std::sqrt(2.0 * M_PI));
    }
    case Family::gamma:
      if (t == 0) return a < 1 ? std::numeric_limits<double>::infinity() : (a == 1 ? b : 0.0);
      return b * boost::math::gamma_p_derivative(a, b * t);
    case Family::loglogistic: {
      const double x = std::pow(t / b, a);
      if (t == 0) return a < 1 ? std::numeric_limits<double>::infinity() : (a == 1 ? 1.0 / b : 0.0);
      return (a / t) * x / ((1 + x) * (1 + x));
    }
    default: return hazard(t) * survival(t);
  }
}

inline double Distribution::hazard(double t) const {
  detail::require_time(t);
  const double a = p_[0], b = p_[1];
  switch (family_) {
    case Family::exponential: return a;
    case Family::weibull:
      if (t == 0) return a < 1 ? std::numeric_limits<double>::infinity() : (a == 1 ? 1.0 / b : 0.0);
      return (a / b) * std::pow(t / b, a - 1);
    case Family::gompertz: return b * std::exp(a * t);
    case Family::loglogistic: {
      if (t == 0) return a < 1 ? std::numeric_limits<double>::infinity() : (a == 1 ? 1.0 / b : 0.0);
      const double x = std::pow(t / b, a);
      return (a / t) * x / (1 + x);
    }
    case Family::lognormal:
    case Family::gamma: {
      const double s = survival(t);
      return s > 0 ? pdf(t) / s : std::numeric_limits<double>::infinity();
    }
  }
  return 0;
}

inline double Distribution::cumhazard_inverse(double h) const {
  if (!(h >= 0)) throw ValidationError("cumulative hazard must be nonnegative");
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (std::isinf(h)) return inf;
  if (h == 0) return 0.0;
  const double a = p_[0], b = p_[1];
  switch (family_) {
    case Family::exponential: return a == 0 ? inf : h / a;
    case Family::weibull: return b * std::pow(h, 1.0 / a);
    case Family::gompertz: {
      if (a == 0) return h / b;
      const double x = a * h / b;
      if (x <= -1) return inf;  // negative shape: cured fraction never reaches h
      return std::log1p(x) / a;
    }
    case Family::loglogistic: return b * std::pow(std::expm1(h), 1.0 / a);
    case Family::lognormal: {
      // S = exp(-h) = Phi(-z)  =>  z = sqrt(2) erfc^{-1}(2 S)
      const double s = std::exp(-h);
      if (s <= 0) return inf;
      return std::exp(a + b * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * s));
    }
    case Family::gamma: {
      // Bracketed root-find on log S(t) + h = 0 (monotone decreasing in t).
      auto f = [&](double t) {
        const double s = boost::math::gamma_q(a, b * t);
        return s > 0 ? std::log(s) + h : -inf;
      };
      double lo = 0.0, hi = std::max(a / b, 1e-300);
      int guard = 0;
      while (f(hi) > 0) {
        lo = hi;
        hi *= 2;
        if (++guard > 2100) return inf;
      }
      if (f(hi) == -inf) {
        // Refine the bracket so both ends are finite for the solver.
        while (guard++ < 4000) {
          const double mid = 0.5 * (lo + hi);
          if (f(mid) == -inf)
            hi = mid;
          else if (f(mid) > 0)
            lo = mid;
          else {
            hi = mid;
            break;
          }
        }
      }
      if (f(lo) == 0) return lo;
      if (f(hi) == 0) return hi;
      boost::uintmax_t max_iter = 200;
      auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
      return 0.5 * (r.first + r.second);
    }
  }
  return 0;
}

inline double Distribution::quantile(double p) const {
  if (!(p >= 0 && p <= 1)) throw ValidationError("quantile requires 0 <= p <= 1");
  if (p == 1) return std::numeric_limits<double>::infinity();
  if (p == 0) return 0.0;
  if (family_ == Family::lognormal)
    return std::exp(p_[0] + p_[1] * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * (1.0 - p)));
  return cumhazard_inverse(-std::log1p(-p));
}

/// Evaluate one of the distribution's functions at x (a time, or a
/// probability for `quantile`).
inline double dist_eval(const Distribution& d, DistFn fn, double x) {
  switch (fn) {
    case DistFn::pdf: return d.pdf(x);
    case DistFn::survival: return d.survival(x);
    case DistFn::hazard: return d.hazard(x);
    case DistFn::cumhazard: return d.cumhazard(x);
    case DistFn::quantile: return d.quantile(x);
  }
  return 0;
}

/// Inverse-CDF draw: returns t with S(t) = 1 - u. Strictly increasing in u.
inline double dist_sample(const Distribution& d, double u) {
  if (!(u > 0 && u < 1)) throw ValidationError("dist_sample: u must lie in (0, 1)");
  return d.quantile(u);
}

/// Draw conditional on survival to `lower`: returns t >= lower solving
/// S(t) / S(lower) = 1 - u.
inline double dist_sample_truncated(const Distribution& d, double lower, double u) {
  if (!(u > 0 && u < 1)) throw ValidationError("dist_sample_truncated: u must lie in (0, 1)");
  if (!(lower >= 0)) throw ValidationError("dist_sample_truncated: lower bound must be nonnegative");
  if (lower == 0) return dist_sample(d, u);
  if (d.family() == Family::exponential) return lower + dist_sample(d, u);
  const double h_lower = d.cumhazard(lower);
  if (!std::isfinite(h_lower) || d.survival(lower) <= 0)
    throw ComputationError("truncation beyond support: S(" + std::to_string(lower) + ") is zero");
  const double t = d.cumhazard_inverse(h_lower - std::log1p(-u));
  return std::max(t, lower);
}

}  // namespace healthsim

#endif  // HEALTHSIM_SURVIVAL_DISTS_HPP
