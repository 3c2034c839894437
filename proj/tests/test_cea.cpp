#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "healthsim/cea.hpp"
#include "healthsim/rng.hpp"

using namespace healthsim;

namespace {

/// Per-sample (qalys, costs) for each strategy, one group, dr 0.
struct Draws {
  std::vector<std::vector<double>> e, c;  // [strategy][sample]
};

CEOutput make_ce(const Draws& d, int grp = 1, CEOutput ce = {}) {
  for (size_t j = 0; j < d.e.size(); ++j)
    for (size_t s = 0; s < d.e[j].size(); ++s) {
      const int sid = static_cast<int>(j + 1), smp = static_cast<int>(s + 1);
      ce.qalys.push_back({0.0, smp, sid, grp, d.e[j][s]});
      ce.costs.push_back({"drug", 0.0, smp, sid, grp, d.c[j][s]});
      ce.costs.push_back({"total", 0.0, smp, sid, grp, d.c[j][s]});
    }
  return ce;
}

const MceRow& mce_of(const CEAResult& r, double k, int sid, int grp = 1) {
  for (const auto& m : r.mce)
    if (m.k == k && m.strategy_id == sid && m.grp_id == grp) return m;
  throw std::runtime_error("no mce row");
}

ValueTotals totals(std::string cat, UnitInfo u, std::vector<double> per_unit, size_t n_states = 1) {
  ValueTotals v(std::move(cat), {0.0}, 1, 1, u, n_states);
  for (size_t k = 0; k < per_unit.size(); ++k) v(0, 0, 0, k, 0) = per_unit[k];
  return v;
}

}  // namespace

TEST_CASE("summarizing model outputs") {
  auto one = UnitInfo::patients({1}, {1}, {1.0});
  auto q = totals("qalys", one, {4.2});
  auto c = totals("drug", one, {1000});
  auto ce = summarize_ce({&c}, q, nullptr, false);
  REQUIRE(ce.qalys.size() == 1);
  CHECK(ce.qalys[0].qalys == 4.2);
  CHECK(std::isnan(ce.qalys[0].lys));
  REQUIRE(ce.costs.size() == 2);
  CHECK(ce.costs[1].category == "total");
  CHECK(ce.costs[1].costs == 1000);

  auto two = UnitInfo::patients({1, 2}, {1, 1}, {1.0, 1.0});
  auto q2 = totals("qalys", two, {1, 3});
  auto a = totals("drug", two, {100, 100}), b = totals("medical", two, {200, 200});
  ce = summarize_ce({&a, &b}, q2, &q2, false);
  CHECK(ce.qalys[0].qalys == 2.0);
  CHECK(ce.qalys[0].lys == 2.0);
  CHECK(ce.costs.back().category == "total");
  CHECK(ce.costs.back().costs == 300.0);

  // Two groups of different size; by_grp keeps them apart.
  auto grouped = UnitInfo::patients({1, 2, 3}, {1, 1, 2}, {1.0, 1.0, 2.0});
  auto q3 = totals("qalys", grouped, {1, 3, 6});
  auto c3 = totals("drug", grouped, {0, 0, 0});
  ce = summarize_ce({&c3}, q3, nullptr, true);
  REQUIRE(ce.qalys.size() == 2);
  CHECK(ce.qalys[0].qalys == 2.0);
  CHECK(ce.qalys[1].qalys == 6.0);
  ce = summarize_ce({&c3}, q3, nullptr, false);
  REQUIRE(ce.qalys.size() == 1);
  CHECK(ce.qalys[0].qalys == Catch::Approx((1 + 3 + 12) / 4.0));

  // Values summed over states.
  ValueTotals states("qalys", {0.0}, 1, 1, one, 3);
  states(0, 0, 0, 0, 0) = 1;
  states(0, 0, 0, 0, 1) = 2;
  CHECK(summarize_ce({&c}, states, nullptr, false).qalys[0].qalys == 3.0);

  auto total = totals("total", one, {1});
  CHECK_THROWS_AS(summarize_ce({&total}, q, nullptr, false), ValidationError);
  CHECK_THROWS_AS(UnitInfo::patients({1}, {1}, {0.0}), ValidationError);
}

TEST_CASE("hand enumerated NMB example") {
  // k = 1 and zero costs make NMB equal to QALYs.
  auto ce = make_ce({{{10, 0}, {0, 8}}, {{0, 0}, {0, 0}}});
  auto r = cea(ce, {1.0}, 0, 0);
  CHECK(mce_of(r, 1, 1).enmb == 5.0);
  CHECK(mce_of(r, 1, 2).enmb == 4.0);
  CHECK(mce_of(r, 1, 1).best == 1);
  CHECK(mce_of(r, 1, 2).best == 0);
  CHECK(mce_of(r, 1, 1).prob == 0.5);
  CHECK(mce_of(r, 1, 2).prob == 0.5);
  REQUIRE(r.evpi.size() == 1);
  CHECK(r.evpi[0].evpi == 4.0);
  CHECK(r.evpi[0].enmbpi == 9.0);
  CHECK(r.ceaf[0].strategy_id == 1);
  CHECK(r.ceaf[0].prob == 0.5);
}

TEST_CASE("zero willingness to pay ranks by cost") {
  auto ce = make_ce({{{9, 9}, {1, 1}}, {{500, 520}, {300, 310}}});
  auto r = cea(ce, {0.0}, 0, 0);
  CHECK(mce_of(r, 0, 2).best == 1);
  CHECK(mce_of(r, 0, 2).prob == 1.0);
  CHECK(mce_of(r, 0, 2).enmb == -305.0);
}

TEST_CASE("identical strategies") {
  auto ce = make_ce({{{3, 5, 4}, {3, 5, 4}}, {{10, 20, 5}, {10, 20, 5}}});
  auto r = cea(ce, {0.0, 100.0}, 0, 0);
  for (const auto& e : r.evpi) CHECK(e.evpi == 0.0);
  CHECK(mce_of(r, 100, 1).prob == 0.5);  // ties split
  CHECK(mce_of(r, 100, 1).best + mce_of(r, 100, 2).best == 1);

  auto pw = cea_pw(ce, 1, {0.0, 100.0}, 0, 0);
  for (const auto& d : pw.delta) {
    CHECK(d.ie == 0.0);
    CHECK(d.ic == 0.0);
    CHECK(d.strategy_id == 2);
  }
  for (const auto& c : pw.ceac) CHECK(c.prob == 0.0);
}

TEST_CASE("pairwise acceptability") {
  auto ce = make_ce({{{0, 0}, {1, 1}}, {{0, 0}, {50, 150}}});
  auto pw = cea_pw(ce, 1, {100.0, 200.0}, 0, 0);
  REQUIRE(pw.ceac.size() == 2);
  CHECK(pw.ceac[0].prob == 0.5);
  CHECK(pw.ceac[1].prob == 1.0);
  CHECK_THROWS_WITH(cea_pw(ce, 3, {1.0}, 0, 0), Catch::Matchers::ContainsSubstring("strategy_id 3"));

  // INMB {-1, 1}.
  auto split = make_ce({{{0, 0}, {0, 0}}, {{0, 0}, {1, -1}}});
  CHECK(cea_pw(split, 1, {1.0}, 0, 0).ceac[0].prob == 0.5);
}

TEST_CASE("ICER summary") {
  auto ce = make_ce({{{0}, {1}}, {{0}, {100}}});
  auto rows = icer_summary(cea_pw(ce, 1, {150.0}, 0, 0), 150);
  REQUIRE(rows.size() == 4);
  CHECK(rows[3].outcome == "icer");
  CHECK(rows[3].estimate == 100.0);
  CHECK(rows[3].label == "ratio");
  CHECK(rows[2].outcome == "incremental_nmb");
  CHECK(rows[2].estimate == 50.0);

  ce = make_ce({{{0, 0}, {0.5, 1.5}}, {{0, 0}, {50, 150}}});
  rows = icer_summary(cea_pw(ce, 1, {1.0}, 0, 0), 1);
  CHECK(rows[3].estimate == 100.0);
  CHECK(rows[0].outcome == "incremental_qalys");
  CHECK(rows[0].lower == Catch::Approx(0.525).epsilon(1e-14));
  CHECK(rows[0].upper == Catch::Approx(1.475).epsilon(1e-14));
  CHECK(rows[1].lower == Catch::Approx(52.5));

  CHECK(quantile7({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile7({7.0}, 0.975) == 7.0);
  CHECK_THROWS_AS(quantile7({}, 0.5), ValidationError);
}

TEST_CASE("ICER quadrants") {
  CHECK(icer_label(1, -1) == "dominates");
  CHECK(icer_label(-1, 1) == "dominated");
  CHECK(icer_label(1, 1) == "ratio");
  CHECK(icer_label(-1, -1) == "ratio");
  CHECK(icer_label(0, 5) == "undefined");

  auto ce = make_ce({{{0}, {-1}}, {{0}, {10}}});
  auto rows = icer_summary(cea_pw(ce, 1, {1.0}, 0, 0), 1);
  CHECK(rows[3].label == "dominated");
  CHECK(std::isnan(rows[3].lower));
  ce = make_ce({{{0}, {0}}, {{0}, {10}}});
  CHECK(std::isnan(icer_summary(cea_pw(ce, 1, {1.0}, 0, 0), 1)[3].estimate));
}

TEST_CASE("CE output checks") {
  auto ce = make_ce({{{1, 2}, {1, 2}}, {{1, 2}, {1, 2}}});
  CHECK_THROWS_WITH(cea(ce, {1.0}, 0.03, 0), Catch::Matchers::ContainsSubstring("discount rate"));
  auto ragged = ce;
  ragged.qalys.pop_back();
  CHECK_THROWS_WITH(cea(ragged, {1.0}, 0, 0), Catch::Matchers::ContainsSubstring("strategy sets differ"));
  CHECK_THROWS_AS(cea(ce, {}, 0, 0), ValidationError);

  const auto dir = std::filesystem::temp_directory_path() / "healthsim_test_cea";
  std::filesystem::create_directories(dir);
  ce.write_csv((dir / "c.csv").string(), (dir / "q.csv").string());
  auto back = load_ce((dir / "c.csv").string(), (dir / "q.csv").string());
  REQUIRE(back.qalys.size() == ce.qalys.size());
  CHECK(back.costs[3].costs == ce.costs[3].costs);
  CHECK(std::isnan(back.qalys[0].lys));
  auto r = cea(back, {1.0, 2.0}, 0, 0);
  auto pw = cea_pw(back, 1, {1.0}, 0, 0);
  write_cea_outputs(dir.string(), r, pw, icer_summary(pw, 1.0), 1.0);
  for (const char* f : {"icer.csv", "mce.csv", "ceaf.csv", "evpi.csv", "ceac.csv", "delta.csv"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(csv::read((dir / "mce.csv").string()).n_rows() == 4);
  std::filesystem::remove_all(dir);
}

TEST_CASE("decision analysis properties over random PSA draws") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    CounterRng rng(seed);
    const size_t nj = 2 + static_cast<size_t>(3 * rng.uniform()), ns = 1 + static_cast<size_t>(60 * rng.uniform());
    Draws d, shifted;
    d.e.resize(nj);
    d.c.resize(nj);
    for (size_t j = 0; j < nj; ++j)
      for (size_t s = 0; s < ns; ++s) {
        d.e[j].push_back(5 + 3 * rng.uniform());
        d.c[j].push_back(std::round(20000 * rng.uniform()));  // integer costs keep the shift exact
      }
    shifted = d;
    for (auto& c : shifted.c)
      for (auto& x : c) x += 4096;
    auto ce = make_ce(d, 1);
    ce = make_ce(shifted, 2, ce);  // a second group holding the shifted costs
    const std::vector<double> k{0, 1000, 25000, 100000};
    auto r = cea(ce, k, 0, 0);
    auto pw = cea_pw(ce, 1, k, 0, 0);

    for (double kk : k) {
      for (int g : {1, 2}) {
        double sum = 0;
        int bests = 0;
        size_t argmax = 0;
        std::vector<double> enmb(nj, 0.0);
        for (size_t j = 0; j < nj; ++j) {
          const auto& m = mce_of(r, kk, static_cast<int>(j + 1), g);
          sum += m.prob;
          bests += m.best;
          const auto& src = g == 1 ? d : shifted;
          for (size_t s = 0; s < ns; ++s) enmb[j] += (src.e[j][s] * kk - src.c[j][s]) / static_cast<double>(ns);
          if (enmb[j] > enmb[argmax] + 1e-9) argmax = j;
        }
        CHECK(std::abs(sum - 1) < 1e-12);
        CHECK(bests == 1);
        CHECK(mce_of(r, kk, static_cast<int>(argmax + 1), g).best == 1);
      }
      for (size_t j = 0; j < nj; ++j) {
        const auto& a = mce_of(r, kk, static_cast<int>(j + 1), 1);
        const auto& b = mce_of(r, kk, static_cast<int>(j + 1), 2);
        CHECK(a.prob == b.prob);
        CHECK(a.best == b.best);
      }
    }
    for (size_t i = 0; i < r.evpi.size(); i += 2) {
      CHECK(r.evpi[i].evpi >= 0);
      CHECK(r.evpi[i].grp_id == 1);
      CHECK(r.evpi[i + 1].grp_id == 2);
      CHECK(std::abs(r.evpi[i].evpi - r.evpi[i + 1].evpi) < 1e-6);
    }
    for (const auto& c : pw.ceac) {
      if (c.grp_id != 1) continue;
      for (const auto& o : pw.ceac)
        if (o.grp_id == 2 && o.k == c.k && o.strategy_id == c.strategy_id) CHECK(o.prob == c.prob);
    }
  }
}
