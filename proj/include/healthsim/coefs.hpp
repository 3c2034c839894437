#ifndef HEALTHSIM_COEFS_HPP
#define HEALTHSIM_COEFS_HPP

// Regression-coefficient parameter objects and the transformations that turn
// them into predictions: PSA draws (multivariate normal, scalar
// distributions), design matrices, linear prediction and link inversion.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "healthsim/core_data.hpp"
#include "healthsim/error.hpp"
#include "healthsim/rng.hpp"
#include "healthsim/survival_dists.hpp"

namespace healthsim {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Method of moments

struct BetaShapes {
  double shape1;
  double shape2;
};

struct GammaParams {
  double shape;
  double rate;
};

/// Beta shape parameters with the given mean and standard error.
inline BetaShapes mom_beta(double mean, double se) {
  if (!(mean > 0 && mean < 1)) throw ValidationError("mom_beta: mean must lie in (0, 1)");
  if (!(se > 0)) throw ValidationError("mom_beta: se must be positive");
  const double v = mean * (1 - mean);
  if (!(se * se < v)) throw ValidationError("infeasible beta moments: se^2 must be below mean * (1 - mean)");
  const double k = v / (se * se) - 1;
  return {mean * k, (1 - mean) * k};
}

/// Gamma shape and rate with the given mean and standard error.
inline GammaParams mom_gamma(double mean, double se) {
  if (!(mean > 0) || !(se > 0))
    throw ValidationError("mom_gamma: mean and se must be positive (use a fixed value when se is 0)");
  return {mean * mean / (se * se), mean / (se * se)};
}

// ---------------------------------------------------------------------------
// Scalar distributions used for PSA draws of state values and other
// quantities specified by moments or natural parameters.

enum class ValueDist { fixed, normal, lognormal, beta, gamma, uniform };

inline ValueDist parse_value_dist(std::string_view s) {
  if (s == "fixed") return ValueDist::fixed;
  if (s == "normal" || s == "norm") return ValueDist::normal;
  if (s == "lognormal" || s == "lnorm") return ValueDist::lognormal;
  if (s == "beta") return ValueDist::beta;
  if (s == "gamma") return ValueDist::gamma;
  if (s == "uniform" || s == "unif") return ValueDist::uniform;
  throw ValidationError("unknown value distribution '" + std::string(s) + "'");
}

class ScalarDist {
 public:
  using ArgLookup = std::function<std::optional<double>(std::string_view)>;

  ScalarDist(ValueDist kind, double a, double b = 0) : kind_(kind), a_(a), b_(b) {}

  /// Build from named arguments: fixed {est|mean}; normal {mean, sd|se};
  /// lognormal {meanlog, sdlog}; beta {mean, se} or {shape1, shape2};
  /// gamma {mean, se}, {shape, rate} or {shape, scale}; uniform {min, max}.
  static ScalarDist from_args(ValueDist kind, const ArgLookup& get) {
    auto need = [&](std::string_view name) {
      auto v = get(name);
      if (!v) throw ValidationError("distribution argument '" + std::string(name) + "' is required");
      return *v;
    };
    auto either = [&](std::string_view x, std::string_view y) {
      auto v = get(x);
      return v ? *v : need(y);
    };
    switch (kind) {
      case ValueDist::fixed: return {kind, get("est") ? *get("est") : need("mean")};
      case ValueDist::normal: {
        const double sd = either("sd", "se");
        if (!(sd >= 0)) throw ValidationError("normal: sd must be nonnegative");
        return {kind, need("mean"), sd};
      }
      case ValueDist::lognormal: {
        const double sd = need("sdlog");
        if (!(sd >= 0)) throw ValidationError("lognormal: sdlog must be nonnegative");
        return {kind, need("meanlog"), sd};
      }
      case ValueDist::beta: {
        if (get("shape1")) {
          const double a = need("shape1"), b = need("shape2");
          if (!(a > 0 && b > 0)) throw ValidationError("beta: shape parameters must be positive");
          return {kind, a, b};
        }
        auto s = mom_beta(need("mean"), need("se"));
        return {kind, s.shape1, s.shape2};
      }
      case ValueDist::gamma: {
        if (get("shape")) {
          const double shape = need("shape");
          const double rate = get("rate") ? *get("rate") : 1.0 / need("scale");
          if (!(shape > 0 && rate > 0)) throw ValidationError("gamma: shape and rate must be positive");
          return {kind, shape, rate};
        }
        auto g = mom_gamma(need("mean"), need("se"));
        return {kind, g.shape, g.rate};
      }
      case ValueDist::uniform: {
        const double lo = need("min"), hi = need("max");
        if (!(hi >= lo)) throw ValidationError("uniform: max must be >= min");
        return {kind, lo, hi};
      }
    }
    throw ValidationError("unsupported distribution");
  }

  ValueDist kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }

  /// Draw by inversion from a uniform on (0, 1).
  double draw(double u) const {
    switch (kind_) {
      case ValueDist::fixed: return a_;
      case ValueDist::normal: return a_ + b_ * std_normal_quantile(u);
      case ValueDist::lognormal: return std::exp(a_ + b_ * std_normal_quantile(u));
      case ValueDist::beta: return boost::math::ibeta_inv(a_, b_, u);
      case ValueDist::gamma: return boost::math::gamma_p_inv(a_, u) / b_;
      case ValueDist::uniform: return a_ + (b_ - a_) * u;
    }
    return a_;
  }

  double draw(CounterRng& rng) const { return kind_ == ValueDist::fixed ? a_ : draw(rng.uniform()); }

  static double std_normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

 private:
  ValueDist kind_;
  double a_, b_;
};

// ---------------------------------------------------------------------------
// Coefficient matrices

/// PSA samples of regression coefficients: one row per sample, one named
/// column per model term. The term "(Intercept)" is a constant 1.
struct CoefMatrix {
  std::vector<std::string> terms;
  RowMatrix draws;

  size_t n_samples() const { return static_cast<size_t>(draws.rows()); }
  size_t n_terms() const { return terms.size(); }
  std::optional<size_t> find(std::string_view term) const {
    for (size_t i = 0; i < terms.size(); ++i)
      if (terms[i] == term) return i;
    return std::nullopt;
  }
};

inline constexpr std::string_view kIntercept = "(Intercept)";

/// Draw n rows from MVN(mean, cov). The covariance may be singular (e.g. all
/// zeros); it is factored with a pivoted LDL^T decomposition and pivots down
/// to -1e-10 are treated as zero.
inline RowMatrix sample_coefs_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, size_t n, CounterRng rng) {
  const Eigen::Index k = mean.size();
  detail::require(cov.rows() == k && cov.cols() == k, "sample_coefs_mvn: covariance must be k x k");
  detail::require(mean.allFinite() && cov.allFinite(), "sample_coefs_mvn: non-finite inputs");
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      detail::require(std::abs(cov(i, j) - cov(j, i)) <= 1e-10, "sample_coefs_mvn: covariance is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sym);
  Eigen::VectorXd d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (d(i) < -1e-10) throw ValidationError("sample_coefs_mvn: covariance is not positive semi-definite");
    d(i) = std::max(d(i), 0.0);
  }
  // cov = P^T L D L^T P  =>  factor F = P^T L sqrt(D)
  Eigen::MatrixXd l = ldlt.matrixL();
  Eigen::MatrixXd f = ldlt.transpositionsP().transpose() * (l * d.cwiseSqrt().asDiagonal());
  RowMatrix out(static_cast<Eigen::Index>(n), k);
  Eigen::VectorXd z(k);
  for (size_t s = 0; s < n; ++s) {
    for (Eigen::Index j = 0; j < k; ++j) z(j) = rng.normal();
    out.row(static_cast<Eigen::Index>(s)) = (mean + f * z).transpose();
  }
  return out;
}

/// Design matrix for `terms` over the input rows. "(Intercept)" resolves to
/// ones unless the input has an explicit column of that name.
inline RowMatrix design_matrix(const InputData& input, const std::vector<std::string>& terms) {
  const auto& cov = input.covariates();
  RowMatrix x(static_cast<Eigen::Index>(input.size()), static_cast<Eigen::Index>(terms.size()));
  for (size_t j = 0; j < terms.size(); ++j) {
    auto c = cov.find(terms[j]);
    if (!c && terms[j] != kIntercept)
      throw ValidationError("input data has no column for model term '" + terms[j] + "'");
    for (size_t i = 0; i < input.size(); ++i)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c ? cov.at(i, *c) : 1.0;
  }
  return x;
}

/// X B^T flattened column-major: entry (sample s, row i) lands at s * N + i,
/// i.e. all input rows for the first sample, then the second, and so on.
inline std::vector<double> xbeta(const RowMatrix& x, const RowMatrix& b) {
  if (x.cols() != b.cols())
    throw ValidationError("xbeta: X has " + std::to_string(x.cols()) + " columns but coefficients have " +
                          std::to_string(b.cols()));
  const Eigen::MatrixXd prod = x * b.transpose();  // N x n_samples, column-major
  return std::vector<double>(prod.data(), prod.data() + prod.size());
}

// ---------------------------------------------------------------------------
// Survival parameters

struct ParamCoefs {
  std::string name;
  Link link = Link::log;
  CoefMatrix coefs;
};

/// Coefficient samples for every parameter of one parametric survival model.
struct SurvivalParams {
  Family family = Family::exponential;
  std::vector<ParamCoefs> params;  // family_params() order

  size_t n_samples() const { return params.empty() ? 0 : params.front().coefs.n_samples(); }

  void validate() const {
    const auto spec = family_params(family);
    const std::string fam(family_name(family));
    detail::require(params.size() == spec.size(), fam + " model needs " + std::to_string(spec.size()) + " parameter(s)");
    for (size_t p = 0; p < spec.size(); ++p) {
      detail::require(params[p].name == spec[p].name,
                      fam + ": parameter " + std::to_string(p + 1) + " must be '" + std::string(spec[p].name) + "'");
      detail::require(params[p].coefs.n_samples() == n_samples(),
                      fam + ": all parameters must have the same number of samples");
      detail::require(static_cast<size_t>(params[p].coefs.draws.cols()) == params[p].coefs.n_terms(),
                      fam + ": coefficient matrix width does not match its term names");
    }
  }
};

/// Survival parameters whose coefficients take the same value in every sample.
inline SurvivalParams fixed_survival_params(Family family,
                                            const std::vector<std::map<std::string, double>>& coefs_by_param,
                                            size_t n_samples) {
  SurvivalParams sp;
  sp.family = family;
  const auto spec = family_params(family);
  detail::require(coefs_by_param.size() == spec.size(), "fixed_survival_params: wrong number of parameters");
  for (size_t p = 0; p < spec.size(); ++p) {
    ParamCoefs pc{std::string(spec[p].name), spec[p].link, {}};
    for (const auto& [term, v] : coefs_by_param[p]) pc.coefs.terms.push_back(term);
    pc.coefs.draws.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(pc.coefs.terms.size()));
    size_t j = 0;
    for (const auto& [term, v] : coefs_by_param[p]) pc.coefs.draws.col(static_cast<Eigen::Index>(j++)).setConstant(v);
    sp.params.push_back(std::move(pc));
  }
  sp.validate();
  return sp;
}

/// SurvivalParams bound to input data: predicts the distribution for any
/// (sample, input row) pair through g(theta_p) = x^T gamma_p.
class SurvivalPredictor {
 public:
  SurvivalPredictor(const SurvivalParams& params, const InputData& input) : family_(params.family) {
    params.validate();
    for (const auto& p : params.params) {
      x_.push_back(design_matrix(input, p.coefs.terms));
      b_.push_back(p.coefs.draws);
      links_.push_back(p.link);
    }
  }

  size_t n_samples() const { return b_.empty() ? 0 : static_cast<size_t>(b_.front().rows()); }

  double linear_predictor(size_t param, size_t sample, size_t row) const {
    return x_[param].row(static_cast<Eigen::Index>(row)).dot(b_[param].row(static_cast<Eigen::Index>(sample)));
  }

  Distribution predict(size_t sample, size_t row) const {
    std::array<double, 2> theta{0.0, 0.0};
    for (size_t p = 0; p < x_.size(); ++p) theta[p] = inverse_link(links_[p], linear_predictor(p, sample, row));
    return Distribution(family_, theta);
  }

 private:
  Family family_;
  std::vector<RowMatrix> x_;
  std::vector<RowMatrix> b_;
  std::vector<Link> links_;
};

// ---------------------------------------------------------------------------
// Declarative random quantities: each named quantity is a distribution with
// per-column arguments, drawn n times into an n x n_columns matrix.

struct RandomParamSpec {
  std::string name;
  ValueDist dist = ValueDist::fixed;
  std::vector<std::string> columns;
  std::map<std::string, std::vector<double>> args;  // one value per column
};

/// Draw every parameter set. Each quantity uses its own sub-stream derived from the
/// master key by name, so results do not depend on list order.
inline std::map<std::string, CoefMatrix> draw_random_params(const std::vector<RandomParamSpec>& specs, size_t n,
                                                            const CounterRng& master) {
  std::map<std::string, CoefMatrix> out;
  for (const auto& spec : specs) {
    detail::require(!spec.columns.empty(), "random parameter '" + spec.name + "' has no columns");
    for (const auto& [arg, vals] : spec.args)
      detail::require(vals.size() == spec.columns.size(),
                      "random parameter '" + spec.name + "': argument '" + arg + "' needs one value per column");
    CoefMatrix m;
    m.terms = spec.columns;
    m.draws.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.columns.size()));
    for (size_t c = 0; c < spec.columns.size(); ++c) {
      auto dist = ScalarDist::from_args(spec.dist, [&](std::string_view a) -> std::optional<double> {
        auto it = spec.args.find(std::string(a));
        if (it == spec.args.end()) return std::nullopt;
        return it->second[c];
      });
      CounterRng rng = master.substream(spec.name).substream({c});
      for (size_t s = 0; s < n; ++s)
        m.draws(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = dist.draw(rng);
    }
    detail::require(out.emplace(spec.name, std::move(m)).second, "duplicate random parameter '" + spec.name + "'");
  }
  return out;
}

}  // namespace healthsim

#endif  // HEALTHSIM_COEFS_HPP
