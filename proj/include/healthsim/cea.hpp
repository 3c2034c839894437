#ifndef HEALTHSIM_CEA_HPP
#define HEALTHSIM_CEA_HPP

// Cost-effectiveness analysis of PSA output: per-sample costs and QALYs by
// strategy and subgroup, net monetary benefit, acceptability curves and
// frontier, EVPI and pairwise ICER summaries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "healthsim/csv.hpp"
#include "healthsim/error.hpp"
#include "healthsim/outputs.hpp"

namespace healthsim {

struct CostRow {
  std::string category;
  double dr = 0;
  int sample = 1;
  int strategy_id = 1;
  int grp_id = 1;
  double costs = 0;
};

struct QalyRow {
  double dr = 0;
  int sample = 1;
  int strategy_id = 1;
  int grp_id = 1;
  double qalys = 0;
  double lys = std::numeric_limits<double>::quiet_NaN();
};

struct CEOutput {
  std::vector<CostRow> costs;  // includes category "total"
  std::vector<QalyRow> qalys;

  void write_csv(const std::string& costs_path, const std::string& qalys_path) const {
    csv::Writer wc(costs_path, {"category", "dr", "sample", "strategy_id", "grp_id", "costs"});
    for (const auto& r : costs) wc.row(r.category, r.dr, r.sample, r.strategy_id, r.grp_id, r.costs);
    csv::Writer wq(qalys_path, {"dr", "sample", "strategy_id", "grp_id", "qalys", "lys"});
    for (const auto& r : qalys) wq.row(r.dr, r.sample, r.strategy_id, r.grp_id, r.qalys, r.lys);
  }
};

namespace detail {

/// Sum over states, weighted mean over units within each group, and with
/// by_grp = false a group-weighted mean over groups. Layout (dr, sample,
/// strategy, group).
inline std::vector<double> aggregate_totals(const ValueTotals& v, bool by_grp, size_t& n_grp) {
  const auto& u = v.units();
  n_grp = by_grp ? u.grp_wt.size() : 1;
  require(!u.grp_wt.empty(), "value totals have no groups");
  std::vector<double> out(v.dr().size() * v.n_samples() * v.n_strategies() * n_grp, 0.0);
  for (size_t d = 0; d < v.dr().size(); ++d)
    for (size_t s = 0; s < v.n_samples(); ++s)
      for (size_t j = 0; j < v.n_strategies(); ++j)
        for (size_t k = 0; k < u.size(); ++k) {
          double sum = 0;
          for (size_t h = 0; h < v.n_states(); ++h) sum += v(d, s, j, k, h);
          const size_t g = static_cast<size_t>(u.grp[k] - 1);
          const double w = by_grp ? u.wt[k] : u.wt[k] * u.grp_wt[g];
          out[((d * v.n_samples() + s) * v.n_strategies() + j) * n_grp + (by_grp ? g : 0)] += w * sum;
        }
  return out;
}

}  // namespace detail

/// Collapse model value totals into a CE object. Cost categories must share
/// discount rates; "total" is their sum.
inline CEOutput summarize_ce(const std::vector<const ValueTotals*>& costs, const ValueTotals& qalys,
                             const ValueTotals* lys, bool by_grp) {
  detail::require(!costs.empty(), "summarize_ce: no cost categories");
  auto same_shape = [&](const ValueTotals& a) {
    detail::require(a.n_samples() == qalys.n_samples() && a.n_strategies() == qalys.n_strategies() &&
                        a.units().grp == qalys.units().grp,
                    "summarize_ce: costs and QALYs do not share ids");
  };
  for (const auto* c : costs) {
    same_shape(*c);
    detail::require(c->dr() == costs.front()->dr(), "summarize_ce: cost categories must use the same discount rates");
    detail::require(c->category() != "total", "summarize_ce: 'total' is a reserved cost category");
  }
  if (lys) {
    same_shape(*lys);
    detail::require(lys->dr() == qalys.dr(), "summarize_ce: life-years must use the QALY discount rates");
  }
  CEOutput ce;
  size_t ng = 0;
  const size_t ns = qalys.n_samples(), nj = qalys.n_strategies();
  const auto& cdr = costs.front()->dr();
  std::vector<double> total(cdr.size() * ns * nj * (by_grp ? qalys.units().grp_wt.size() : 1), 0.0);
  std::vector<std::vector<double>> agg;
  for (const auto* c : costs) {
    agg.push_back(detail::aggregate_totals(*c, by_grp, ng));
    for (size_t k = 0; k < total.size(); ++k) total[k] += agg.back()[k];
  }
  auto emit_costs = [&](const std::string& name, const std::vector<double>& a) {
    for (size_t d = 0; d < cdr.size(); ++d)
      for (size_t s = 0; s < ns; ++s)
        for (size_t j = 0; j < nj; ++j)
          for (size_t g = 0; g < ng; ++g)
            ce.costs.push_back({name, cdr[d], static_cast<int>(s + 1), static_cast<int>(j + 1), static_cast<int>(g + 1),
                                a[((d * ns + s) * nj + j) * ng + g]});
  };
  for (size_t c = 0; c < costs.size(); ++c) emit_costs(costs[c]->category(), agg[c]);
  emit_costs("total", total);

  const auto q = detail::aggregate_totals(qalys, by_grp, ng);
  std::vector<double> l;
  if (lys) l = detail::aggregate_totals(*lys, by_grp, ng);
  for (size_t d = 0; d < qalys.dr().size(); ++d)
    for (size_t s = 0; s < ns; ++s)
      for (size_t j = 0; j < nj; ++j)
        for (size_t g = 0; g < ng; ++g) {
          const size_t k = ((d * ns + s) * nj + j) * ng + g;
          ce.qalys.push_back({qalys.dr()[d], static_cast<int>(s + 1), static_cast<int>(j + 1), static_cast<int>(g + 1),
                              q[k], lys ? l[k] : std::numeric_limits<double>::quiet_NaN()});
        }
  return ce;
}

inline CEOutput load_ce(const std::string& costs_path, const std::string& qalys_path) {
  CEOutput ce;
  const auto c = csv::read(costs_path);
  const size_t cc = c.col("category"), cd = c.col("dr"), cs = c.col("sample"), cj = c.col("strategy_id"),
               cg = c.col("grp_id"), cv = c.col("costs");
  for (size_t r = 0; r < c.n_rows(); ++r)
    ce.costs.push_back({c.cell(r, cc), c.number(r, cd), static_cast<int>(c.integer(r, cs)),
                        static_cast<int>(c.integer(r, cj)), static_cast<int>(c.integer(r, cg)), c.number(r, cv)});
  const auto q = csv::read(qalys_path);
  const size_t qd = q.col("dr"), qs = q.col("sample"), qj = q.col("strategy_id"), qg = q.col("grp_id"),
               qv = q.col("qalys");
  const auto ql = q.find("lys");
  for (size_t r = 0; r < q.n_rows(); ++r)
    ce.qalys.push_back({q.number(r, qd), static_cast<int>(q.integer(r, qs)), static_cast<int>(q.integer(r, qj)),
                        static_cast<int>(q.integer(r, qg)), q.number(r, qv),
                        ql && !q.is_missing(r, *ql) ? q.number(r, *ql) : std::numeric_limits<double>::quiet_NaN()});
  return ce;
}

/// Dense per-sample effects and costs at one pair of discount rates,
/// indexed [grp][sample][strategy] with ids taken as sorted positions.
struct CEMatrix {
  std::vector<int> samples, strategies, groups;
  std::vector<double> e, c;

  size_t idx(size_t g, size_t s, size_t j) const { return (g * samples.size() + s) * strategies.size() + j; }
  size_t strategy_pos(int id) const {
    auto it = std::find(strategies.begin(), strategies.end(), id);
    if (it == strategies.end()) throw ValidationError("strategy_id " + std::to_string(id) + " not in CE output");
    return static_cast<size_t>(it - strategies.begin());
  }
};

inline CEMatrix ce_matrix(const CEOutput& ce, double dr_qalys, double dr_costs) {
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  std::map<std::tuple<int, int, int>, double> e, c;
  for (const auto& r : ce.qalys)
    if (near(r.dr, dr_qalys))
      detail::require(e.emplace(std::make_tuple(r.grp_id, r.sample, r.strategy_id), r.qalys).second,
                      "duplicate QALY row in CE output");
  for (const auto& r : ce.costs)
    if (r.category == "total" && near(r.dr, dr_costs))
      detail::require(c.emplace(std::make_tuple(r.grp_id, r.sample, r.strategy_id), r.costs).second,
                      "duplicate total cost row in CE output");
  detail::require(!e.empty(), "no QALYs at discount rate " + csv::format(dr_qalys));
  detail::require(!c.empty(), "no total costs at discount rate " + csv::format(dr_costs));
  CEMatrix m;
  std::set<int> gs, ss, js;
  for (const auto& [k, v] : e) {
    gs.insert(std::get<0>(k));
    ss.insert(std::get<1>(k));
    js.insert(std::get<2>(k));
  }
  m.groups.assign(gs.begin(), gs.end());
  m.samples.assign(ss.begin(), ss.end());
  m.strategies.assign(js.begin(), js.end());
  const size_t n = m.groups.size() * m.samples.size() * m.strategies.size();
  detail::require(e.size() == n, "strategy sets differ across samples or groups in QALY output");
  detail::require(c.size() == n, "costs and QALYs do not cover the same (sample, strategy, group) keys");
  m.e.resize(n);
  m.c.resize(n);
  for (size_t g = 0; g < m.groups.size(); ++g)
    for (size_t s = 0; s < m.samples.size(); ++s)
      for (size_t j = 0; j < m.strategies.size(); ++j) {
        const auto key = std::make_tuple(m.groups[g], m.samples[s], m.strategies[j]);
        auto ie = e.find(key);
        auto ic = c.find(key);
        detail::require(ie != e.end() && ic != c.end(), "strategy sets differ across samples or groups");
        m.e[m.idx(g, s, j)] = ie->second;
        m.c[m.idx(g, s, j)] = ic->second;
      }
  return m;
}

struct MceRow {
  double k;
  int strategy_id, grp_id;
  double prob;
  int best;
  double enmb;
};
struct CeafRow {
  double k;
  int grp_id, strategy_id;
  double prob;
};
struct EvpiRow {
  double k;
  int grp_id;
  double evpi, enmbpi, enmb;
};

struct CEAResult {
  std::vector<MceRow> mce;
  std::vector<CeafRow> ceaf;
  std::vector<EvpiRow> evpi;
};

/// Probability each strategy is most cost-effective (ties split equally),
/// the frontier and EVPI at every willingness to pay k.
inline CEAResult cea(const CEOutput& ce, const std::vector<double>& k_grid, double dr_qalys, double dr_costs) {
  detail::require(!k_grid.empty(), "willingness-to-pay grid is empty");
  const CEMatrix m = ce_matrix(ce, dr_qalys, dr_costs);
  const size_t ns = m.samples.size(), nj = m.strategies.size();
  CEAResult out;
  std::vector<double> nmb(nj), enmb(nj), prob(nj);
  for (double k : k_grid)
    for (size_t g = 0; g < m.groups.size(); ++g) {
      std::fill(enmb.begin(), enmb.end(), 0.0);
      std::fill(prob.begin(), prob.end(), 0.0);
      double sum_max = 0;
      for (size_t s = 0; s < ns; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < nj; ++j) {
          nmb[j] = m.e[m.idx(g, s, j)] * k - m.c[m.idx(g, s, j)];
          enmb[j] += nmb[j];
          mx = std::max(mx, nmb[j]);
        }
        const double n_tied = static_cast<double>(std::count(nmb.begin(), nmb.end(), mx));
        for (size_t j = 0; j < nj; ++j)
          if (nmb[j] == mx) prob[j] += 1.0 / n_tied;
        sum_max += mx;
      }
      size_t best = 0;
      for (size_t j = 0; j < nj; ++j) {
        enmb[j] /= static_cast<double>(ns);
        prob[j] /= static_cast<double>(ns);
        if (enmb[j] > enmb[best]) best = j;
      }
      const int gid = m.groups[g];
      for (size_t j = 0; j < nj; ++j) out.mce.push_back({k, m.strategies[j], gid, prob[j], j == best ? 1 : 0, enmb[j]});
      out.ceaf.push_back({k, gid, m.strategies[best], prob[best]});
      const double enmbpi = sum_max / static_cast<double>(ns);
      // E[max] >= max E holds exactly; only rounding can make it negative.
      out.evpi.push_back({k, gid, std::max(0.0, enmbpi - enmb[best]), enmbpi, enmb[best]});
    }
  return out;
}

struct DeltaRow {
  int sample, strategy_id, grp_id;
  double ie, ic;
};
struct CeacRow {
  double k;
  int strategy_id, grp_id;
  double prob;
};

struct CEAPairwiseResult {
  int comparator = 1;
  std::vector<DeltaRow> delta;  // comparator excluded
  std::vector<CeacRow> ceac;
};

/// Per-sample increments against a comparator and the probability each
/// strategy has positive incremental NMB (strict inequality).
inline CEAPairwiseResult cea_pw(const CEOutput& ce, int comparator, const std::vector<double>& k_grid, double dr_qalys,
                                double dr_costs) {
  const CEMatrix m = ce_matrix(ce, dr_qalys, dr_costs);
  const size_t c0 = m.strategy_pos(comparator);
  CEAPairwiseResult out;
  out.comparator = comparator;
  const size_t ns = m.samples.size();
  for (size_t g = 0; g < m.groups.size(); ++g)
    for (size_t j = 0; j < m.strategies.size(); ++j) {
      if (j == c0) continue;
      for (size_t s = 0; s < ns; ++s)
        out.delta.push_back({m.samples[s], m.strategies[j], m.groups[g], m.e[m.idx(g, s, j)] - m.e[m.idx(g, s, c0)],
                             m.c[m.idx(g, s, j)] - m.c[m.idx(g, s, c0)]});
    }
  for (double k : k_grid)
    for (size_t g = 0; g < m.groups.size(); ++g)
      for (size_t j = 0; j < m.strategies.size(); ++j) {
        if (j == c0) continue;
        size_t wins = 0;
        for (size_t s = 0; s < ns; ++s) {
          const double inmb = (m.e[m.idx(g, s, j)] - m.e[m.idx(g, s, c0)]) * k -
                              (m.c[m.idx(g, s, j)] - m.c[m.idx(g, s, c0)]);
          if (inmb > 0) ++wins;
        }
        out.ceac.push_back({k, m.strategies[j], m.groups[g], static_cast<double>(wins) / static_cast<double>(ns)});
      }
  return out;
}

/// Linear-interpolation sample quantile (type 7).
inline double quantile7(std::vector<double> x, double p) {
  detail::require(!x.empty(), "quantile of an empty sample");
  detail::require(p >= 0 && p <= 1, "quantile probability must be in [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// "dominates" (more effective, less costly), "dominated" (less effective,
/// more costly), "undefined" (no difference in effect) or "ratio".
inline std::string icer_label(double mean_ie, double mean_ic) {
  if (mean_ie > 0 && mean_ic < 0) return "dominates";
  if (mean_ie < 0 && mean_ic > 0) return "dominated";
  if (mean_ie == 0) return "undefined";
  return "ratio";
}

struct IcerRow {
  int strategy_id, grp_id;
  std::string outcome;  // incremental_qalys, incremental_costs, incremental_nmb, icer
  double estimate, lower, upper;
  std::string label;  // icer rows only
};

/// Means with 95% PSA intervals of the increments, INMB at k, and the ICER
/// as a ratio of means.
inline std::vector<IcerRow> icer_summary(const CEAPairwiseResult& pw, double k) {
  std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>> by_key;  // (grp, strategy)
  for (const auto& d : pw.delta) {
    auto& v = by_key[{d.grp_id, d.strategy_id}];
    v.first.push_back(d.ie);
    v.second.push_back(d.ic);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<IcerRow> out;
  for (const auto& [key, v] : by_key) {
    const auto [g, j] = key;
    auto mean = [](const std::vector<double>& x) {
      return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    };
    std::vector<double> inmb(v.first.size());
    for (size_t s = 0; s < inmb.size(); ++s) inmb[s] = v.first[s] * k - v.second[s];
    auto summary = [&](const char* name, const std::vector<double>& x) {
      out.push_back({j, g, name, mean(x), quantile7(x, 0.025), quantile7(x, 0.975), ""});
    };
    summary("incremental_qalys", v.first);
    summary("incremental_costs", v.second);
    summary("incremental_nmb", inmb);
    const double ie = mean(v.first), ic = mean(v.second);
    const std::string label = icer_label(ie, ic);
    out.push_back({j, g, "icer", label == "undefined" ? nan : ic / ie, nan, nan, label});
  }
  return out;
}

/// Write icer.csv, mce.csv, ceaf.csv, evpi.csv, ceac.csv and delta.csv.
inline void write_cea_outputs(const std::string& dir, const CEAResult& r, const CEAPairwiseResult& pw,
                              const std::vector<IcerRow>& icer, double icer_k) {
  {
    csv::Writer w(dir + "/icer.csv", {"k", "strategy_id", "grp_id", "outcome", "estimate", "lower", "upper", "label"});
    for (const auto& x : icer) w.row(icer_k, x.strategy_id, x.grp_id, x.outcome, x.estimate, x.lower, x.upper, x.label);
  }
  {
    csv::Writer w(dir + "/mce.csv", {"k", "strategy_id", "grp_id", "prob", "best", "enmb"});
    for (const auto& x : r.mce) w.row(x.k, x.strategy_id, x.grp_id, x.prob, x.best, x.enmb);
  }
  {
    csv::Writer w(dir + "/ceaf.csv", {"k", "grp_id", "strategy_id", "prob"});
    for (const auto& x : r.ceaf) w.row(x.k, x.grp_id, x.strategy_id, x.prob);
  }
  {
    csv::Writer w(dir + "/evpi.csv", {"k", "grp_id", "evpi", "enmbpi", "enmb"});
    for (const auto& x : r.evpi) w.row(x.k, x.grp_id, x.evpi, x.enmbpi, x.enmb);
  }
  {
    csv::Writer w(dir + "/ceac.csv", {"k", "strategy_id", "grp_id", "prob"});
    for (const auto& x : pw.ceac) w.row(x.k, x.strategy_id, x.grp_id, x.prob);
  }
  {
    csv::Writer w(dir + "/delta.csv", {"sample", "strategy_id", "grp_id", "ie", "ic"});
    for (const auto& x : pw.delta) w.row(x.sample, x.strategy_id, x.grp_id, x.ie, x.ic);
  }
}

}  // namespace healthsim

#endif  // HEALTHSIM_CEA_HPP
