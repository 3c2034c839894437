#include <catch_amalgamated.hpp>

#include <random>

#include "healthsim/state_values.hpp"

using namespace healthsim;

namespace {

/// Drug cost by strategy with a price change 3 months after state entry.
MeanValueParams drug_costs() {
  MeanValueParams mv({2, 3, 4, 2, 2}, {false, true, false, true, true}, {0.0, 0.25}, true);
  for (size_t j = 0; j < 3; ++j)
    for (size_t h = 0; h < 2; ++h) {
      mv.at(0, j, 0, h, 0) = h == 1 ? 1500.0 : 1000.0 * static_cast<double>(j + 1);
      mv.at(0, j, 0, h, 1) = h == 1 ? 1200.0 : 1000.0 * static_cast<double>(j + 1);
    }
  return mv;
}

}  // namespace

TEST_CASE("lookup by time since state entry") {
  const auto mv = drug_costs();
  ValueQuery q{1, 1, 3, 1, 0.1, TimeOrigin::state_entry};
  CHECK(predict_stateval(mv, q) == 1500.0);
  q.time = 0.25;  // an interval start belongs to the new interval
  CHECK(predict_stateval(mv, q) == 1200.0);
  q.time = 0.2499999;
  CHECK(predict_stateval(mv, q) == 1500.0);
  q.time = 80.0;
  CHECK(predict_stateval(mv, q) == 1200.0);
  q.state = 2;
  CHECK(predict_stateval(mv, q) == 0.0);
  q = {0, 2, 0, 0, 1.0, TimeOrigin::state_entry};
  CHECK(predict_stateval(mv, q) == 3000.0);
}

TEST_CASE("query validation") {
  const auto mv = drug_costs();
  CHECK_THROWS_WITH(predict_stateval(mv, {0, 0, 0, 0, 1.0, TimeOrigin::model}),
                    Catch::Matchers::ContainsSubstring("time since state entry"));
  CHECK_THROWS_AS(predict_stateval(mv, {0, 0, 0, 0, -0.5, TimeOrigin::state_entry}), ValidationError);
  CHECK_THROWS_AS(predict_stateval(mv, {2, 0, 0, 0, 0.0, TimeOrigin::state_entry}), ValidationError);
  CHECK_THROWS_AS(predict_stateval(mv, {0, 3, 0, 0, 0.0, TimeOrigin::state_entry}), ValidationError);
  CHECK_THROWS_AS(predict_stateval(mv, {0, 0, 4, 0, 0.0, TimeOrigin::state_entry}), ValidationError);
  CHECK_THROWS_AS(predict_stateval(mv, {0, 0, 0, 3, 0.0, TimeOrigin::state_entry}), ValidationError);

  // A single interval is the same under either origin.
  auto one = MeanValueParams::constant(0.7, 1, 1, 1, 2);
  CHECK(predict_stateval(one, {0, 0, 0, 1, 3.0, TimeOrigin::model}) == 0.7);
  CHECK(predict_stateval(one, {0, 0, 0, 1, 3.0, TimeOrigin::state_entry}) == 0.7);

  CHECK_THROWS_AS(MeanValueParams({1, 1, 1, 1, 2}, {}, {0.0, 0.0}, false), ValidationError);
  CHECK_THROWS_AS(MeanValueParams({1, 1, 1, 1, 1}, {}, {1.0}, false), ValidationError);
  CHECK_THROWS_AS(MeanValueParams({1, 1, 1, 1, 1}, {}, {0.0, 1.0}, false), ValidationError);
}

TEST_CASE("broadcast storage") {
  auto c = MeanValueParams::constant(1.0, 1000, 3, 500, 4);
  CHECK(c.stored_size() == 1);
  CHECK(c.value(999, 2, 499, 3, 0) == 1.0);
  CHECK(c.value(999, 2, 499, 4, 0) == 0.0);
  const auto mv = drug_costs();
  CHECK(mv.stored_size() == 3 * 2 * 2);
  CHECK(mv.broadcast(MeanValueParams::kSample));
  CHECK(!mv.broadcast(MeanValueParams::kStrategy));
}

TEST_CASE("broadcast matches dense storage") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 100; ++rep) {
    std::array<size_t, 5> dims{1 + gen() % 3, 1 + gen() % 3, 1 + gen() % 3, 1 + gen() % 3, 1 + gen() % 3};
    std::array<bool, 5> varies{};
    for (auto& v : varies) v = gen() % 2;
    std::vector<double> starts;
    for (size_t m = 0; m < dims[4]; ++m) starts.push_back(static_cast<double>(m));
    MeanValueParams sparse(dims, varies, starts, false);
    MeanValueParams dense(dims, {true, true, true, true, true}, starts, false);
    std::array<size_t, 5> i{};
    auto pick = [&](size_t d) { return varies[d] ? i[d] : size_t{0}; };
    for (i[0] = 0; i[0] < dims[0]; ++i[0])
      for (i[1] = 0; i[1] < dims[1]; ++i[1])
        for (i[2] = 0; i[2] < dims[2]; ++i[2])
          for (i[3] = 0; i[3] < dims[3]; ++i[3])
            for (i[4] = 0; i[4] < dims[4]; ++i[4]) {
              if (pick(0) == i[0] && pick(1) == i[1] && pick(2) == i[2] && pick(3) == i[3] && pick(4) == i[4])
                sparse.at(i[0], i[1], i[2], i[3], i[4]) = u(gen);
            }
    for (i[0] = 0; i[0] < dims[0]; ++i[0])
      for (i[1] = 0; i[1] < dims[1]; ++i[1])
        for (i[2] = 0; i[2] < dims[2]; ++i[2])
          for (i[3] = 0; i[3] < dims[3]; ++i[3])
            for (i[4] = 0; i[4] < dims[4]; ++i[4])
              dense.at(i[0], i[1], i[2], i[3], i[4]) = sparse.value(pick(0), pick(1), pick(2), pick(3), pick(4));
    for (i[0] = 0; i[0] < dims[0]; ++i[0])
      for (i[1] = 0; i[1] < dims[1]; ++i[1])
        for (i[2] = 0; i[2] < dims[2]; ++i[2])
          for (i[3] = 0; i[3] <= dims[3]; ++i[3])
            for (i[4] = 0; i[4] < dims[4]; ++i[4]) {
              ValueQuery q{i[0], i[1], i[2], i[3], static_cast<double>(i[4]) + 0.5, TimeOrigin::model};
              CHECK(predict_stateval(sparse, q) == predict_stateval(dense, q));
            }
  }
}
