#include <catch_amalgamated.hpp>

#include <random>

#include "healthsim/core_data.hpp"

using namespace healthsim;

namespace {

StrategyTable strategies(int n) {
  StrategyTable s;
  for (int j = 1; j <= n; ++j) s.strategy_id.push_back(j);
  return s;
}

PatientTable patients(int n) {
  PatientTable p;
  for (int i = 1; i <= n; ++i) p.patient_id.push_back(i);
  return p;
}

StateTable states(std::vector<std::string> names) {
  StateTable s;
  for (size_t h = 0; h < names.size(); ++h) s.state_id.push_back(static_cast<int>(h + 1));
  s.state_name = std::move(names);
  return s;
}

TransitionMatrix illness_death() { return TransitionMatrix(3, {0, 1, 2, 0, 0, 3, 0, 0, 0}, {"Stable", "Progression", "Death"}); }

}  // namespace

TEST_CASE("expand orders rows by strategy then patient") {
  ModelContext ctx(strategies(3), patients(1000), states({"Stable", "Progression"}));
  auto in = expand(ctx);
  REQUIRE(in.size() == 3000);
  CHECK(in.row(0).strategy_id == 1);
  CHECK(in.row(0).patient_id == 1);
  CHECK(in.row(1).patient_id == 2);
  CHECK(in.row(1000).strategy_id == 2);
  CHECK(in.row(2999).strategy_id == 3);
  CHECK(in.row(2999).patient_id == 1000);
}

TEST_CASE("expand of singletons gives one row") {
  ModelContext ctx(strategies(1), patients(1), states({"A"}));
  CHECK(expand(ctx).size() == 1);
}

TEST_CASE("expand carries groups and weights") {
  auto p = patients(4);
  p.grp_id = {1, 1, 2, 2};
  p.patient_wt = {0.25, 0.25, 0.25, 0.25};
  ModelContext ctx(strategies(3), p, states({"A", "B"}));
  auto in = expand(ctx);
  REQUIRE(in.size() == 12);
  CHECK(in.row(2).grp_id == 2);
  CHECK(in.row(2).patient_wt == 0.25);
  CHECK(in.row(4).patient_id == 1);
  CHECK(in.row(4).strategy_id == 2);
  CHECK(ctx.weight_in_group(0) == Catch::Approx(0.5));
  CHECK(ctx.group_weight(2) == Catch::Approx(0.5));
}

TEST_CASE("expand merges covariates and rejects duplicates") {
  auto s = strategies(2);
  s.covariates = {{"new"}, {0.0, 1.0}};
  auto p = patients(2);
  p.covariates = {{"age", "female"}, {50, 1, 60, 0}};
  ModelContext ctx(s, p, states({"A"}));
  auto in = expand(ctx);
  REQUIRE(in.covariates().names == std::vector<std::string>{"new", "age", "female"});
  CHECK(in.covariates().at(3, 0) == 1.0);
  CHECK(in.covariates().at(3, 1) == 60.0);

  p.covariates = {{"new"}, {1, 1}};
  ModelContext dup(s, p, states({"A"}));
  CHECK_THROWS_WITH(expand(dup), Catch::Matchers::ContainsSubstring("both strategies and patients"));
  CHECK_THROWS_AS(expand(ctx, {"visits"}), ValidationError);
}

TEST_CASE("context canonicalizes and validates tables") {
  StrategyTable s;
  s.strategy_id = {2, 1};
  s.strategy_name = {"New", "SOC"};
  ModelContext ctx(s, patients(2), states({"A"}));
  CHECK(ctx.strategies().strategy_id == std::vector<int>{1, 2});
  CHECK(ctx.strategies().strategy_name.front() == "SOC");
  CHECK_THROWS_WITH(ModelContext(StrategyTable{}, patients(1), states({"A"})),
                    Catch::Matchers::ContainsSubstring("strategies"));
  CHECK_THROWS_WITH(ModelContext(strategies(1), PatientTable{}, states({"A"})),
                    Catch::Matchers::ContainsSubstring("patients"));
  StrategyTable gap;
  gap.strategy_id = {1, 3};
  CHECK_THROWS_AS(ModelContext(gap, patients(1), states({"A"})), ValidationError);
  CHECK_THROWS_WITH(ModelContext(strategies(1), patients(1), states({"A"}), illness_death()),
                    Catch::Matchers::ContainsSubstring("dimension"));
}

TEST_CASE("transition matrix numbering") {
  auto t = illness_death();
  CHECK(t.n_transitions() == 3);
  CHECK(t.transition(1, 2) == 1);
  CHECK(t.transition(2, 3) == 3);
  CHECK_FALSE(t.transition(2, 1).has_value());
  CHECK(t.from(2) == 1);
  CHECK(t.to(2) == 3);
  CHECK(t.is_absorbing(3));
  CHECK_THROWS_AS(TransitionMatrix(2, {1, 0, 0, 0}), ValidationError);  // diagonal
  CHECK_THROWS_AS(TransitionMatrix(2, {0, 2, 0, 0}), ValidationError);  // numbering
  CHECK_THROWS_AS(TransitionMatrix(2, {0, 1, 2, 0}), ValidationError);  // death row
}

TEST_CASE("labels include death and named groups only") {
  StrategyTable s = strategies(3);
  s.strategy_name = {"SOC", "New 1", "New 2"};
  ModelContext ctx(s, patients(2), states({"Stable", "Progression"}), illness_death());
  auto labs = get_labels(ctx);
  const auto* st = labs.find("state_id");
  REQUIRE(st);
  CHECK(st->id_of("Stable") == 1);
  CHECK(st->id_of("Progression") == 2);
  CHECK(st->id_of("Death") == 3);
  CHECK(labs.find("strategy_id")->id_of("New 1") == 2);
  CHECK(labs.find("strategy_id")->id_of("New 2") == 3);
  CHECK(labs.find("grp_id") == nullptr);

  s.strategy_name = {"SOC", "SOC", "New"};
  ModelContext dup(s, patients(1), states({"A", "B"}));
  CHECK_THROWS_WITH(get_labels(dup), Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("weights normalize within group for random inputs") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> ng(1, 4), np(1, 30);
    std::uniform_real_distribution<double> w(0.01, 5.0);
    const int groups = ng(gen);
    PatientTable p;
    const int n = std::max(groups, np(gen));
    for (int i = 0; i < n; ++i) {
      p.patient_id.push_back(n - i);  // reverse order exercises sorting
      p.grp_id.push_back(i < groups ? i + 1 : 1 + static_cast<int>(gen() % static_cast<uint64_t>(groups)));
      p.patient_wt.push_back(w(gen));
    }
    ModelContext ctx(strategies(2), p, states({"A"}));
    std::vector<double> tot(static_cast<size_t>(groups), 0.0);
    for (size_t i = 0; i < ctx.n_patients(); ++i)
      tot[static_cast<size_t>(ctx.patients().grp_id[i] - 1)] += ctx.weight_in_group(i);
    for (double t : tot) CHECK(std::abs(t - 1.0) < 1e-12);
    double gsum = 0;
    for (double g : ctx.group_weights()) gsum += g;
    CHECK(std::abs(gsum - 1.0) < 1e-12);
    auto a = expand(ctx), b = expand(ctx);
    CHECK(a.size() == 2 * static_cast<size_t>(n));
    for (size_t r = 0; r < a.size(); ++r) CHECK((a.row(r).patient_id == b.row(r).patient_id && a.row(r).grp_id == b.row(r).grp_id));
  }
}

TEST_CASE("csv loaders") {
  auto pt = load_patients(csv::parse("patient_id,grp_id,age,female\n2,1,50,0\n1,1,60,1\n", "patients.csv"));
  ModelContext ctx(strategies(1), pt, states({"A"}));
  CHECK(ctx.patients().patient_id.front() == 1);
  CHECK(ctx.patients().covariates.at(0, 0) == 60);
  CHECK_THROWS_WITH(load_patients(csv::parse("patient_id,sex\n1,F\n", "p.csv")),
                    Catch::Matchers::ContainsSubstring("indicator"));
  auto tm = load_transition_matrix(csv::parse("from,Stable,Progression,Death\nStable,NA,1,2\nProgression,NA,NA,3\nDeath,NA,NA,NA\n", "tmat.csv"));
  CHECK(tm.n_transitions() == 3);
  CHECK(tm.state_names().back() == "Death");
}

TEST_CASE("number formatting round trips") {
  CHECK(healthsim::csv::format(100000.0) == "100000");
  CHECK(healthsim::csv::format(0.1) == "0.1");
  CHECK(healthsim::csv::format(-2.5) == "-2.5");
  CHECK(healthsim::csv::format(1e-300) == "1e-300");
  CHECK(healthsim::csv::format(0.0) == "0");
  CHECK(healthsim::csv::format(-std::numeric_limits<double>::infinity()) == "-Inf");
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> mant(-1, 1), expo(-20, 20);
  for (int rep = 0; rep < 1000; ++rep) {
    const double v = mant(gen) * std::pow(10.0, expo(gen));
    CHECK(healthsim::csv::parse_number(healthsim::csv::format(v), "v") == v);
  }
}
