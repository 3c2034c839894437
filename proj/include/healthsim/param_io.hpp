#ifndef HEALTHSIM_PARAM_IO_HPP
#define HEALTHSIM_PARAM_IO_HPP

// Reading coefficient tables. Long format, one row per coefficient:
//   <key>, family, parameter, term, est        point estimates
//   <key>, family, parameter, term, est, sample  pre-drawn PSA samples
// where <key> is the transition or curve number. An optional covariance
// table (<key>, row_parameter, row_term, col_parameter, col_term, cov) turns
// point estimates into multivariate normal draws.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "healthsim/coefs.hpp"
#include "healthsim/core_data.hpp"
#include "healthsim/csv.hpp"
#include "healthsim/error.hpp"
#include "healthsim/rng.hpp"
#include "healthsim/transprobs.hpp"

namespace healthsim {

namespace detail {

struct CoefBlock {
  std::vector<std::pair<std::string, std::string>> coefs;  // (parameter, term) in first-seen order
  std::map<std::pair<std::string, std::string>, std::map<int, double>> values;  // sample (0 = point) -> value

  size_t position(const std::string& p, const std::string& t) const {
    for (size_t k = 0; k < coefs.size(); ++k)
      if (coefs[k].first == p && coefs[k].second == t) return k;
    throw ValidationError("no coefficient for parameter '" + p + "', term '" + t + "'");
  }
  void add(const std::string& p, const std::string& t, int sample, double v, const std::string& where) {
    auto key = std::make_pair(p, t);
    if (!values.count(key)) coefs.push_back(key);
    require(values[key].emplace(sample, v).second, where + ": duplicate coefficient for " + p + " / " + t);
  }
};

/// Draw matrix (n x n_coefs) for one block.
inline RowMatrix block_draws(const CoefBlock& b, bool presampled, size_t n, const Eigen::MatrixXd* cov,
                             const CounterRng& rng, const std::string& what) {
  const auto k = static_cast<Eigen::Index>(b.coefs.size());
  RowMatrix out(static_cast<Eigen::Index>(n), k);
  if (presampled) {
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto& v = b.values.at(b.coefs[static_cast<size_t>(c)]);
      for (size_t s = 0; s < n; ++s) {
        auto it = v.find(static_cast<int>(s + 1));
        require(it != v.end(), what + ": coefficient " + b.coefs[static_cast<size_t>(c)].first + " / " +
                                   b.coefs[static_cast<size_t>(c)].second + " has no value for sample " +
                                   std::to_string(s + 1));
        out(static_cast<Eigen::Index>(s), c) = it->second;
      }
    }
    return out;
  }
  Eigen::VectorXd mean(k);
  for (Eigen::Index c = 0; c < k; ++c) mean(c) = b.values.at(b.coefs[static_cast<size_t>(c)]).at(0);
  if (cov) return sample_coefs_mvn(mean, *cov, n, rng);
  for (size_t s = 0; s < n; ++s) out.row(static_cast<Eigen::Index>(s)) = mean.transpose();
  return out;
}

}  // namespace detail

/// One SurvivalParams per model number 1..n_models.
inline std::vector<SurvivalParams> load_survival_params(const csv::Table& t, const std::string& key_col,
                                                        size_t n_models, size_t n_samples, const csv::Table* vcov,
                                                        const CounterRng& rng) {
  const std::string where = t.source();
  const size_t ck = t.col(key_col), cf = t.col("family"), cp = t.col("parameter"), ct = t.col("term"),
               ce = t.col("est");
  const auto cs = t.find("sample");
  std::vector<std::optional<Family>> family(n_models);
  std::vector<detail::CoefBlock> blocks(n_models);
  for (size_t r = 0; r < t.n_rows(); ++r) {
    const auto m = t.integer(r, ck);
    detail::require(m >= 1 && static_cast<size_t>(m) <= n_models,
                    where + ": " + key_col + " " + std::to_string(m) + " out of range 1.." + std::to_string(n_models));
    const auto mi = static_cast<size_t>(m - 1);
    const Family f = parse_family(t.cell(r, cf));
    detail::require(!family[mi] || *family[mi] == f, where + ": " + key_col + " " + std::to_string(m) +
                                                         " mixes distribution families");
    family[mi] = f;
    const int sample = cs ? static_cast<int>(t.integer(r, *cs)) : 0;
    detail::require(!cs || sample >= 1, where + ": sample numbers start at 1");
    blocks[mi].add(t.cell(r, cp), t.cell(r, ct), sample, t.number(r, ce), where);
  }

  std::vector<Eigen::MatrixXd> covs(n_models);
  std::vector<bool> has_cov(n_models, false);
  if (vcov) {
    detail::require(!cs, where + ": a covariance table cannot be combined with pre-drawn samples");
    const size_t vk = vcov->col(key_col), vrp = vcov->col("row_parameter"), vrt = vcov->col("row_term"),
                 vcp = vcov->col("col_parameter"), vct = vcov->col("col_term"), vc = vcov->col("cov");
    for (size_t m = 0; m < n_models; ++m) {
      const auto k = static_cast<Eigen::Index>(blocks[m].coefs.size());
      covs[m] = Eigen::MatrixXd::Zero(k, k);
    }
    std::vector<std::set<std::pair<Eigen::Index, Eigen::Index>>> seen(n_models);
    for (size_t r = 0; r < vcov->n_rows(); ++r) {
      const auto m = vcov->integer(r, vk);
      detail::require(m >= 1 && static_cast<size_t>(m) <= n_models, vcov->source() + ": " + key_col + " out of range");
      const auto mi = static_cast<size_t>(m - 1);
      const auto i = static_cast<Eigen::Index>(blocks[mi].position(vcov->cell(r, vrp), vcov->cell(r, vrt)));
      const auto j = static_cast<Eigen::Index>(blocks[mi].position(vcov->cell(r, vcp), vcov->cell(r, vct)));
      const double v = vcov->number(r, vc);
      if (seen[mi].count({j, i}) && i != j)
        detail::require(std::abs(covs[mi](j, i) - v) <= 1e-10, vcov->source() + ": covariance is not symmetric");
      covs[mi](i, j) = covs[mi](j, i) = v;
      seen[mi].insert({i, j});
      has_cov[mi] = true;
    }
  }

  std::vector<SurvivalParams> out;
  for (size_t m = 0; m < n_models; ++m) {
    const std::string what = where + " " + key_col + " " + std::to_string(m + 1);
    detail::require(family[m].has_value(), where + ": no coefficients for " + key_col + " " + std::to_string(m + 1));
    const RowMatrix draws = detail::block_draws(blocks[m], cs.has_value(), n_samples, has_cov[m] ? &covs[m] : nullptr,
                                                rng.substream(key_col).substream({m + 1}), what);
    SurvivalParams sp;
    sp.family = *family[m];
    for (const auto& spec : family_params(sp.family)) {
      ParamCoefs pc{std::string(spec.name), spec.link, {}};
      std::vector<Eigen::Index> cols;
      for (size_t c = 0; c < blocks[m].coefs.size(); ++c)
        if (blocks[m].coefs[c].first == spec.name) {
          pc.coefs.terms.push_back(blocks[m].coefs[c].second);
          cols.push_back(static_cast<Eigen::Index>(c));
        }
      detail::require(!cols.empty(), what + ": missing coefficients for parameter '" + std::string(spec.name) + "'");
      pc.coefs.draws.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(cols.size()));
      for (size_t c = 0; c < cols.size(); ++c) pc.coefs.draws.col(static_cast<Eigen::Index>(c)) = draws.col(cols[c]);
      sp.params.push_back(std::move(pc));
    }
    for (const auto& [p, term] : blocks[m].coefs) {
      bool known = false;
      for (const auto& spec : family_params(sp.family)) known = known || spec.name == p;
      detail::require(known, what + ": '" + p + "' is not a parameter of the " + std::string(family_name(sp.family)) +
                                 " distribution");
    }
    sp.validate();
    out.push_back(std::move(sp));
  }
  return out;
}

/// Multinomial logit coefficients: columns from_state, to_state, term, est
/// and optionally sample. Staying in from_state is the reference category.
inline std::vector<MlogitParams> load_mlogit_params(const csv::Table& t, const TransitionMatrix& tmat,
                                                    size_t n_samples) {
  const size_t cf = t.col("from_state"), cto = t.col("to_state"), ct = t.col("term"), ce = t.col("est");
  const auto cs = t.find("sample");
  std::map<int, std::map<int, detail::CoefBlock>> blocks;  // from -> to -> coefs (parameter = "")
  std::map<int, std::vector<std::string>> terms;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    const int from = static_cast<int>(t.integer(r, cf)), to = static_cast<int>(t.integer(r, cto));
    detail::require(from >= 1 && static_cast<size_t>(from) <= tmat.n_states() && tmat.transition(from, to),
                    t.source() + ": " + std::to_string(from) + " -> " + std::to_string(to) +
                        " is not a permitted transition");
    const std::string term = t.cell(r, ct);
    auto& ts = terms[from];
    if (std::find(ts.begin(), ts.end(), term) == ts.end()) ts.push_back(term);
    blocks[from][to].add("", term, cs ? static_cast<int>(t.integer(r, *cs)) : 0, t.number(r, ce), t.source());
  }
  std::vector<MlogitParams> out;
  for (int h = 1; static_cast<size_t>(h) < tmat.n_states(); ++h) {
    if (tmat.is_absorbing(h)) continue;
    detail::require(blocks.count(h), t.source() + ": no coefficients for transitions out of state " + std::to_string(h));
    MlogitParams mp;
    mp.from_state = h;
    mp.terms = terms[h];
    mp.categories.push_back(h);
    for (int tr : tmat.transitions_from(h)) mp.categories.push_back(tmat.to(tr));
    std::sort(mp.categories.begin(), mp.categories.end());
    mp.reference = static_cast<size_t>(std::find(mp.categories.begin(), mp.categories.end(), h) - mp.categories.begin());
    for (int to : mp.categories) {
      if (to == h) continue;
      auto it = blocks[h].find(to);
      detail::require(it != blocks[h].end(), t.source() + ": no coefficients for " + std::to_string(h) + " -> " +
                                                 std::to_string(to));
      detail::CoefBlock b;
      for (const auto& term : mp.terms) {
        auto v = it->second.values.find({"", term});
        detail::require(v != it->second.values.end(), t.source() + ": " + std::to_string(h) + " -> " +
                                                          std::to_string(to) + " is missing term '" + term + "'");
        for (const auto& [s, x] : v->second) b.add("", term, s, x, t.source());
      }
      mp.coefs.push_back(detail::block_draws(b, cs.has_value(), n_samples, nullptr, CounterRng(0), t.source()));
    }
    mp.validate();
    out.push_back(std::move(mp));
  }
  return out;
}

}  // namespace healthsim

#endif  // HEALTHSIM_PARAM_IO_HPP
