#ifndef HEALTHSIM_TOOLS_RUN_HPP
#define HEALTHSIM_TOOLS_RUN_HPP

// End-to-end runs driven by a JSON configuration: build the model, simulate,
// write result tables and a manifest.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "config.hpp"
#include "healthsim/healthsim.hpp"

#ifndef HEALTHSIM_VERSION
#define HEALTHSIM_VERSION "0.0.0"
#endif

namespace healthsim::cli {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw ComputationError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

struct RunOptions {
  std::string config;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  unsigned threads = 1;
};

struct CeaOptions {
  std::optional<std::string> config;
  std::string ce_dir;
  std::string out_dir = ".";
  std::optional<std::vector<double>> k;
  std::optional<int> comparator;
  std::optional<double> dr_qalys, dr_costs, icer_k;
};

struct RunSummary {
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  std::optional<size_t> psm_crossings;
};

/// Ascending time or WTP grid: an explicit list or {from, to, by}.
inline std::vector<double> read_grid(const Config& cfg, const std::string& key) {
  const auto& n = cfg.node().at(key);
  std::vector<double> g;
  if (n.is_array()) {
    g = cfg.get<std::vector<double>>(key);
  } else {
    auto c = cfg.child(key);
    const double from = c.get<double>("from"), to = c.get<double>("to"), by = c.get<double>("by");
    detail::require(by > 0 && to >= from, "grid '" + key + "' needs by > 0 and to >= from");
    const auto steps = static_cast<size_t>(std::floor((to - from) / by + 1e-9));
    for (size_t k = 0; k <= steps; ++k) g.push_back(from + static_cast<double>(k) * by);
  }
  detail::require(!g.empty(), "grid '" + key + "' is empty");
  for (size_t k = 1; k < g.size(); ++k) detail::require(g[k] > g[k - 1], "grid '" + key + "' must be increasing");
  return g;
}

inline std::vector<double> parse_k_list(const std::string& s) {
  std::vector<double> out;
  if (auto c1 = s.find(':'); c1 != std::string::npos) {
    auto c2 = s.find(':', c1 + 1);
    detail::require(c2 != std::string::npos, "--k range must be from:to:by");
    const double from = csv::parse_number(s.substr(0, c1), "--k"), to = csv::parse_number(s.substr(c1 + 1, c2 - c1 - 1), "--k"),
                 by = csv::parse_number(s.substr(c2 + 1), "--k");
    detail::require(by > 0 && to >= from, "--k range needs by > 0 and to >= from");
    const auto steps = static_cast<size_t>(std::floor((to - from) / by + 1e-9));
    for (size_t k = 0; k <= steps; ++k) out.push_back(from + static_cast<double>(k) * by);
    return out;
  }
  size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(csv::parse_number(s.substr(pos, next - pos), "--k"));
    pos = next + 1;
  }
  return out;
}

namespace detail_run {

struct InputLog {
  std::vector<std::tuple<std::string, std::string, std::string>> files;  // (config key, path as written, sha256)

  csv::Table table(const Config& cfg, const std::string& key) {
    const std::string path = cfg.path(key);
    const std::string bytes = csv::read_file(path);
    files.emplace_back(cfg.where() + "/" + key, cfg.raw_path(key), sha256_hex(bytes));
    return csv::parse(bytes, path);
  }
};

struct ValueSpec {
  std::string category;
  MeanValueParams values;
};

inline ValueSpec read_values(const Config& c, InputLog& inputs, const ModelContext& ctx, size_t n,
                             const CounterRng& rng, const std::string& category) {
  auto tbl = load_stateval_table(inputs.table(c, "table"));
  const bool needs_flag = tbl.by_time();
  detail::require(!needs_flag || c.has("time_reset"),
                  "state value table '" + category + "' has time intervals, so 'time_reset' must be set explicitly");
  const bool reset = c.get_or<bool>("time_reset", false);
  return {category, stateval_draw(tbl, ctx, n, reset, rng.substream("values").substream(category))};
}

inline void write_manifest(const std::string& path, const nlohmann::ordered_json& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << m.dump(2) << '\n';
}

}  // namespace detail_run

inline CEAResult run_cea_tables(const CEOutput& ce, const Config* cfg, const CeaOptions& o, const std::string& out_dir,
                                RunSummary& summary) {
  std::optional<Config> c;
  if (cfg) c = cfg->child_opt("cea");
  auto pick_d = [&](const std::optional<double>& flag, const char* key, std::optional<double> fallback) {
    if (flag) return *flag;
    if (c && c->has(key)) return c->get<double>(key);
    if (fallback) return *fallback;
    throw ValidationError(std::string("CEA setting '") + key + "' is required");
  };
  std::vector<double> k;
  if (o.k) k = *o.k;
  else if (c && c->has("k")) k = read_grid(*c, "k");
  else throw ValidationError("CEA setting 'k' (willingness-to-pay grid) is required");
  int comparator = 1;
  if (o.comparator) comparator = *o.comparator;
  else if (c && c->has("comparator")) comparator = c->get<int>("comparator");
  const double drq = pick_d(o.dr_qalys, "dr_qalys", 0.03), drc = pick_d(o.dr_costs, "dr_costs", 0.03);
  const double icer_k = pick_d(o.icer_k, "icer_k", k.back());

  auto res = cea(ce, k, drq, drc);
  auto pw = cea_pw(ce, comparator, k, drq, drc);
  auto icer = icer_summary(pw, icer_k);
  write_cea_outputs(out_dir, res, pw, icer, icer_k);
  for (const char* f : {"icer.csv", "mce.csv", "ceaf.csv", "evpi.csv", "ceac.csv", "delta.csv"})
    summary.outputs.push_back(f);
  return res;
}

/// Run the model described by the configuration and write its outputs.
inline RunSummary run_simulate(const RunOptions& opt) {
  const Config cfg = Config::load(opt.config);
  RunSummary summary;
  detail_run::InputLog inputs;

  const std::string model = cfg.get<std::string>("model_type");
  detail::require(model == "cohort-dtstm" || model == "indiv-ctstm" || model == "psm",
                  "model_type must be cohort-dtstm, indiv-ctstm or psm, not '" + model + "'");
  std::optional<uint64_t> seed = opt.seed;
  if (cfg.has("seed")) {
    const auto s = cfg.get<uint64_t>("seed");
    if (!seed) seed = s;
  }
  detail::require(seed.has_value(), "a seed is required (config key 'seed' or --seed)");
  const auto n = cfg.get<size_t>("n_samples");
  detail::require(n > 0, "n_samples must be positive");

  auto strategies = load_strategies(inputs.table(cfg, "strategies"));
  auto patients = load_patients(inputs.table(cfg, "patients"));
  auto states = load_states(inputs.table(cfg, "states"));
  std::optional<TransitionMatrix> tmat;
  if (model != "psm") tmat = load_transition_matrix(inputs.table(cfg, "tmat"));
  const ModelContext ctx(std::move(strategies), std::move(patients), std::move(states), tmat);
  const InputData input = expand(ctx);
  const CounterRng master(*seed);

  const auto dr_q = cfg.get_or<std::vector<double>>("dr_qalys", {0.03});
  const auto dr_c = cfg.get_or<std::vector<double>>("dr_costs", {0.03});
  detail::require(!dr_q.empty() && !dr_c.empty(), "discount rate lists must not be empty");

  auto utility = detail_run::read_values(cfg.child("utility"), inputs, ctx, n, master, "qalys");
  std::vector<detail_run::ValueSpec> costs;
  for (const auto& c : cfg.items("costs"))
    costs.push_back(detail_run::read_values(c, inputs, ctx, n, master, c.get<std::string>("category")));
  detail::require(!costs.empty(), "at least one cost category is required");
  for (size_t a = 0; a < costs.size(); ++a)
    for (size_t b = 0; b < a; ++b)
      detail::require(costs[a].category != costs[b].category, "duplicate cost category '" + costs[a].category + "'");
  const MeanValueParams ones = MeanValueParams::constant(1.0, n, ctx.n_strategies(), ctx.n_patients(), ctx.n_states());

  std::filesystem::create_directories(opt.out_dir);
  auto out = [&](const std::string& name) {
    summary.outputs.push_back(name);
    return (std::filesystem::path(opt.out_dir) / name).string();
  };

  ValueTotals qalys, lys;
  std::vector<ValueTotals> cost_totals;
  const CounterRng prng = master.substream("parameters");

  if (model == "cohort-dtstm") {
    const auto c = cfg.child("cohort");
    CohortSettings s;
    s.cycle_length = c.get<double>("cycle_length");
    s.n_cycles = c.get<size_t>("n_cycles");
    s.method = parse_integration(c.get_or<std::string>("method", "trapezoid"));
    const std::string kind = c.get_or<std::string>("transition_model", "intensity");
    TransProbArray tp;
    if (kind == "intensity") {
      const auto tbl = inputs.table(c, "transitions");
      std::optional<csv::Table> vcov;
      if (c.has("transitions_vcov")) vcov = inputs.table(c, "transitions_vcov");
      auto params = load_survival_params(tbl, "transition", tmat->n_transitions(), n, vcov ? &*vcov : nullptr, prng);
      tp = transprobs_from_intensity(params, *tmat, input, n, s.cycle_length);
    } else if (kind == "mlogit") {
      tp = transprobs_from_mlogit(load_mlogit_params(inputs.table(c, "transitions"), *tmat, n), *tmat, input, n);
    } else {
      throw ValidationError("cohort transition_model must be 'intensity' or 'mlogit'");
    }
    if (c.has("relative_risks")) {
      std::vector<std::pair<int, int>> index;
      std::vector<std::vector<double>> rr_cols;
      size_t q = 0;
      for (const auto& r : c.items("relative_risks")) {
        index.emplace_back(r.get<int>("from"), r.get<int>("to"));
        RandomParamSpec spec;
        spec.name = "rr" + std::to_string(++q);
        spec.dist = parse_value_dist(r.get_or<std::string>("dist", "normal"));
        const auto lrr = r.child("log_rr");
        std::vector<int> ids;
        for (const auto& [sid, args] : lrr.node().items()) {
          const auto a = lrr.child(sid);
          ids.push_back(static_cast<int>(csv::parse_number(sid, "strategy id in log_rr")));
          spec.columns.push_back("strategy_" + sid);
          for (const auto& [an, av] : args.items()) spec.args[an].push_back(a.get<double>(an));
        }
        auto draws = draw_random_params({spec}, n, prng.substream("relative_risks"));
        RowMatrix x = RowMatrix::Zero(static_cast<Eigen::Index>(input.size()), static_cast<Eigen::Index>(ids.size()));
        for (size_t i = 0; i < input.size(); ++i)
          for (size_t k = 0; k < ids.size(); ++k)
            if (input.row(i).strategy_id == ids[k]) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 1.0;
        auto lp = xbeta(x, draws.at(spec.name).draws);
        for (double& v : lp) v = std::exp(v);
        rr_cols.push_back(std::move(lp));
      }
      Eigen::MatrixXd rr(static_cast<Eigen::Index>(tp.n_matrices()), static_cast<Eigen::Index>(index.size()));
      for (size_t k = 0; k < index.size(); ++k)
        for (size_t m = 0; m < tp.n_matrices(); ++m)
          rr(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = rr_cols[k][m];
      tp = apply_rr(tp, rr, index);
    }
    std::optional<std::vector<double>> x0;
    if (c.has("x0")) x0 = c.get<std::vector<double>>("x0");
    const auto sp = sim_stateprobs_cohort(tp, s, x0, opt.threads);
    sp.write_csv(out("stateprobs.csv"));
    qalys = integrate_statevals(sp, utility.values, dr_q, s.method, "qalys");
    lys = integrate_statevals(sp, ones, dr_q, s.method, "lys");
    for (const auto& cs : costs) cost_totals.push_back(integrate_statevals(sp, cs.values, dr_c, s.method, cs.category));
  } else if (model == "indiv-ctstm") {
    const auto c = cfg.child("indiv");
    TransitionModel tm{*tmat, {}, parse_clock(c.get<std::string>("clock")), {}, std::numeric_limits<double>::infinity(),
                       c.get_or<double>("max_t", 100.0)};
    std::optional<csv::Table> vcov;
    if (c.has("transitions_vcov")) vcov = inputs.table(c, "transitions_vcov");
    tm.transitions = load_survival_params(inputs.table(c, "transitions"), "transition", tmat->n_transitions(), n,
                                          vcov ? &*vcov : nullptr, prng);
    if (c.has("max_age")) tm.max_age = c.get<double>("max_age");
    if (c.has("start_age_column")) {
      const auto col = c.get<std::string>("start_age_column");
      const auto& pc = ctx.patients().covariates;
      auto j = pc.find(col);
      detail::require(j.has_value(), "patients table has no column '" + col + "' for start ages");
      for (size_t i = 0; i < ctx.n_patients(); ++i) tm.start_age.push_back(pc.at(i, *j));
    }
    const auto dp = sim_disease(tm, input, n, *seed, opt.threads);
    dp.write_csv(out("disprog.csv"));
    const auto sp = sim_stateprobs_indiv(dp, read_grid(c, "t_grid"));
    sp.write_csv(out("stateprobs.csv"));
    qalys = sim_values_indiv(dp, utility.values, dr_q, "qalys");
    lys = sim_values_indiv(dp, ones, dr_q, "lys");
    for (const auto& cs : costs) cost_totals.push_back(sim_values_indiv(dp, cs.values, dr_c, cs.category));
  } else {
    const auto c = cfg.child("psm");
    std::optional<csv::Table> vcov;
    if (c.has("curves_vcov")) vcov = inputs.table(c, "curves_vcov");
    auto curves = load_survival_params(inputs.table(c, "curves"), "curve", ctx.n_states(), n, vcov ? &*vcov : nullptr, prng);
    const auto method = parse_integration(c.get_or<std::string>("method", "trapezoid"));
    const auto sc = sim_survival(curves, input, read_grid(c, "t_grid"), n, opt.threads);
    sc.write_csv(out("survival.csv"));
    const auto psp = stateprobs_from_survival(sc);
    summary.psm_crossings = psp.crossings;
    if (psp.crossings > 0)
      summary.warnings.push_back("survival curves crossed at " + std::to_string(psp.crossings) +
                                 " grid point(s); lower curves were capped");
    psp.probs.write_csv(out("stateprobs.csv"));
    qalys = integrate_statevals(psp.probs, utility.values, dr_q, method, "qalys");
    lys = integrate_statevals(psp.probs, ones, dr_q, method, "lys");
    for (const auto& cs : costs) cost_totals.push_back(integrate_statevals(psp.probs, cs.values, dr_c, method, cs.category));
  }

  write_value_totals(out("qalys.csv"), {&qalys, &lys});
  std::vector<const ValueTotals*> cp;
  for (const auto& c : cost_totals) cp.push_back(&c);
  write_value_totals(out("costs.csv"), cp);
  const CEOutput ce = summarize_ce(cp, qalys, &lys, cfg.get_or<bool>("by_grp", false));
  ce.write_csv(out("ce_costs.csv"), out("ce_qalys.csv"));
  if (cfg.has("cea")) run_cea_tables(ce, &cfg, CeaOptions{}, opt.out_dir, summary);

  for (const auto& k : cfg.unused()) summary.warnings.push_back("config key '" + k + "' is not used by " + model);
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';

  nlohmann::ordered_json m;
  m["tool"] = "healthsim";
  m["version"] = HEALTHSIM_VERSION;
  m["command"] = "simulate";
  m["model_type"] = model;
  m["seed"] = *seed;
  m["n_samples"] = n;
  m["config"] = {{"file", std::filesystem::path(opt.config).filename().string()},
                 {"sha256", sha256_hex(csv::read_file(opt.config))}};
  m["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [key, path, sha] : inputs.files) m["inputs"].push_back({{"key", key}, {"path", path}, {"sha256", sha}});
  if (summary.psm_crossings) m["psm_crossings"] = *summary.psm_crossings;
  m["outputs"] = summary.outputs;
  m["warnings"] = summary.warnings;
  detail_run::write_manifest(out("manifest.json"), m);
  return summary;
}

/// CEA from CE tables (ce_costs.csv, ce_qalys.csv) written by a prior run.
inline RunSummary run_cea(const CeaOptions& opt) {
  RunSummary summary;
  std::optional<Config> cfg;
  if (opt.config) cfg = Config::load(*opt.config);
  const std::string costs = (std::filesystem::path(opt.ce_dir) / "ce_costs.csv").string();
  const std::string qalys = (std::filesystem::path(opt.ce_dir) / "ce_qalys.csv").string();
  const CEOutput ce = load_ce(costs, qalys);
  std::filesystem::create_directories(opt.out_dir);
  run_cea_tables(ce, cfg ? &*cfg : nullptr, opt, opt.out_dir, summary);
  nlohmann::ordered_json m;
  m["tool"] = "healthsim";
  m["version"] = HEALTHSIM_VERSION;
  m["command"] = "cea";
  m["inputs"] = {{{"path", "ce_costs.csv"}, {"sha256", sha256_hex(csv::read_file(costs))}},
                 {{"path", "ce_qalys.csv"}, {"sha256", sha256_hex(csv::read_file(qalys))}}};
  m["outputs"] = summary.outputs;
  detail_run::write_manifest((std::filesystem::path(opt.out_dir) / "cea_manifest.json").string(), m);
  summary.outputs.push_back("cea_manifest.json");
  return summary;
}

}  // namespace healthsim::cli

#endif  // HEALTHSIM_TOOLS_RUN_HPP
