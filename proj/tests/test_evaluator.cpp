#include <eigenhearts/error.hpp>
#include <eigenhearts/evaluator.hpp>

#include <random>

#include "doctest.h"

using namespace eigenhearts;

TEST_CASE("accuracy by hand count") {
  const std::vector<LabelPair> all{{0, 0}, {1, 1}, {2, 2}};
  const std::vector<LabelPair> none{{0, 1}, {1, 0}};
  const std::vector<LabelPair> three{{0, 0}, {1, 1}, {2, 2}, {3, 0}};
  CHECK(accuracy(all) == 1.0);
  CHECK(accuracy(none) == 0.0);
  CHECK(accuracy(three) == 0.75);
  CHECK_THROWS_AS(accuracy(std::vector<LabelPair>{}), Error);
}

TEST_CASE("perfect predictions give a diagonal confusion matrix") {
  const auto roster = cardiac_roster();
  std::vector<LabelPair> pairs;
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 100; ++i) pairs.push_back({c, c});
  const ConfusionMatrix m = confusion(pairs, roster);
  REQUIRE(m.counts.size() == 5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) CHECK(m.counts[r][c] == (r == c ? 100u : 0u));
  CHECK(m.total() == 500);
  CHECK(m.trace() == 500);
}

TEST_CASE("trace over total equals accuracy") {
  const auto roster = cardiac_roster();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cls(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LabelPair> pairs(1 + trial * 7);
    for (auto& p : pairs) p = {cls(rng), cls(rng)};
    const auto m = confusion(pairs, roster);
    CHECK(m.total() == pairs.size());
    CHECK(static_cast<double>(m.trace()) / static_cast<double>(m.total()) == accuracy(pairs));
    std::size_t sum = 0;
    for (auto r : m.row_sums()) sum += r;
    CHECK(sum == pairs.size());
  }
}

TEST_CASE("confusion rejects labels outside the roster") {
  const std::vector<LabelPair> pairs{{0, 7}};
  try {
    confusion(pairs, cardiac_roster());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Roster);
  }
}

TEST_CASE("aggregate mean and sample std") {
  const std::vector<double> flat{0.9, 0.9, 0.9};
  const auto a = aggregate(flat);
  CHECK(a.mean == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(a.std == doctest::Approx(0.0).epsilon(1e-15));

  const std::vector<double> two{0.8, 0.9};
  const auto b = aggregate(two);
  CHECK(b.mean == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(b.std == doctest::Approx(0.070710678118654752).epsilon(1e-12));

  const std::vector<double> one{0.4};
  CHECK(aggregate(one).std == 0.0);

  const std::vector<double> five{1.0, 0.95, 0.97, 0.99, 0.94};
  const auto c = aggregate(five);
  double mean = 0.0;
  for (double x : five) mean += x / 5.0;
  double ss = 0.0;
  for (double x : five) ss += (x - mean) * (x - mean);
  CHECK(c.mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(c.std == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);
}

TEST_CASE("mean/std formatting") {
  RunAggregate a;
  a.mean = 0.97;
  a.std = 0.0271;
  CHECK(format_mean_std(a) == "0.97 ± 0.0271");
  CHECK(format_mean_std(a, "±") == "0.97±0.0271");
  a.mean = 1.0;
  a.std = 0.0;
  CHECK(format_mean_std(a) == "1 ± 0");
}

TEST_CASE("sample vote accuracy") {
  const std::vector<LabelPair> pairs{{0, 0}, {0, 1}, {0, 0}, {1, 0}, {1, 0}, {1, 1}};
  const std::vector<std::string> samples{"a", "a", "a", "b", "b", "b"};
  CHECK(sample_vote_accuracy(pairs, samples) == 0.5);
}

TEST_CASE("json export") {
  const std::vector<LabelPair> pairs{{0, 0}, {1, 0}};
  const auto j = to_json(confusion(pairs, {{0, "H"}, {1, "DC"}}));
  CHECK(j["counts"][1][0] == 1);
  const std::vector<double> acc{0.5, 1.0};
  const auto k = to_json(aggregate(acc));
  CHECK(k["mean"] == 0.75);
  CHECK(k["accuracies"].size() == 2);
}
