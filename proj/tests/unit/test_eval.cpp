#include <doctest.h>

#include "../support/reference.hpp"
#include "tsam/eval.hpp"

using namespace tsam;

namespace {

std::vector<double> draws(ref::Rng& rng, std::size_t n, int levels) {
  // Coarse levels force plenty of ties.
  std::uniform_int_distribution<int> d(0, levels);
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(d(rng) / static_cast<double>(levels));
  return out;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc({0.9, 0.8}, {0.1, 0.2}) == 1.0);
  CHECK(auc({0.3, 0.3}, {0.3}) == 0.5);
  CHECK(auc({0.9, 0.4}, {0.5, 0.1}) == 0.75);
  CHECK(ref::rank_auc({0.9, 0.4}, {0.5, 0.1}) == 0.75);
  CHECK_THROWS_AS(auc({}, {0.1}), UndefinedMetricError);
  CHECK_THROWS_AS(auc({0.1}, {}), UndefinedMetricError);
  CHECK_THROWS_AS(auc({NAN}, {0.1}), DegenerateInputError);
}

TEST_CASE("exact auc equals the rank statistic") {
  ref::Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pos = draws(rng, 1 + rng() % 40, trial % 2 ? 5 : 1000);
    const auto neg = draws(rng, 1 + rng() % 40, trial % 2 ? 5 : 1000);
    CHECK(auc(pos, neg) == ref::rank_auc(pos, neg));
  }
}

TEST_CASE("sampled auc approaches exact auc") {
  ref::Rng rng(101);
  int close = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    auto pos = draws(rng, 20 + rng() % 60, 50);
    auto neg = draws(rng, 20 + rng() % 60, 50);
    for (auto& p : pos) p += 0.1;
    if (std::abs(auc(pos, neg, AucMode::sampled(100000, trial)) - auc(pos, neg)) <= 0.01) ++close;
  }
  CHECK(close >= trials * 95 / 100);
  CHECK(auc({1.0}, {0.0}, AucMode::sampled(10, 1)) == 1.0);
  CHECK_THROWS_AS(auc({1.0}, {0.0}, AucMode::sampled(0, 1)), ParameterError);
}

TEST_CASE("prauc examples") {
  CHECK(prauc({0.9, 0.8}, {0.1, 0.2}) == 1.0);
  CHECK(prauc({0.99}, {0.5, 0.1, 0.3}) == 1.0);
  CHECK(prauc({0.9, 0.4}, {0.5, 0.1}) == doctest::Approx(19.0 / 24.0).epsilon(1e-15));
  CHECK(prauc({0.9, 0.4}, {0.5, 0.1}) == doctest::Approx(ref::threshold_prauc({0.9, 0.4}, {0.5, 0.1})));
  CHECK(prauc({0.2, 0.2}, {0.2, 0.2, 0.2, 0.2}) == doctest::Approx(1.0 / 3.0));
  CHECK(prauc({0.5}, {}) == 1.0);
  CHECK_THROWS_AS(prauc({}, {0.5}), UndefinedMetricError);
}

TEST_CASE("prauc equals threshold enumeration on random instances") {
  ref::Rng rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pos = draws(rng, 1 + rng() % 30, trial % 2 ? 4 : 1000);
    const auto neg = draws(rng, 1 + rng() % 30, trial % 2 ? 4 : 1000);
    CHECK(prauc(pos, neg) == doctest::Approx(ref::threshold_prauc(pos, neg)).epsilon(1e-12));
  }
}

TEST_CASE("auc and prauc are invariant under increasing transforms") {
  ref::Rng rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pos = draws(rng, 1 + rng() % 20, 10);
    const auto neg = draws(rng, 1 + rng() % 20, 10);
    auto warp = [](std::vector<double> v) {
      for (auto& s : v) s = std::exp(3 * s) + 2;
      return v;
    };
    CHECK(auc(pos, neg) == auc(warp(pos), warp(neg)));
    CHECK(prauc(pos, neg) == doctest::Approx(prauc(warp(pos), warp(neg))).epsilon(1e-14));
  }
}

TEST_CASE("split_candidates") {
  const auto a = build_adjacency({{0, 1}, {1, 2}}, 3);
  const auto same = split_candidates(a, a);
  CHECK(same.added.empty());
  CHECK(same.removed.empty());
  CHECK(same.persisted.size() == 2);

  const auto from_empty = split_candidates(DirectedSnapshot(3, 0), a);
  CHECK(from_empty.added.size() == 2);
  CHECK(from_empty.removed.empty());

  const auto s = split_candidates(build_adjacency({{0, 1}}, 3), build_adjacency({{1, 2}}, 3));
  CHECK(s.removed == std::vector<Pair>{{0, 1}});
  CHECK(s.added == std::vector<Pair>{{1, 2}});
  CHECK(s.never.size() == 4);
  CHECK_THROWS_AS(split_candidates(DirectedSnapshot(3, 0), DirectedSnapshot(4, 0)), DimensionError);
}

TEST_CASE("split_candidates partitions the off-diagonal pairs") {
  ref::Rng rng(104);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const auto a = ref::random_digraph(rng, n, 0.4, true);
    const auto b = ref::random_digraph(rng, n, 0.4, true);
    const auto s = split_candidates(a, b);
    std::vector<Pair> all;
    for (const auto* part : {&s.persisted, &s.removed, &s.added, &s.never}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    CHECK(all.size() == static_cast<std::size_t>(n * (n - 1)));
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    for (auto [i, j] : all) CHECK(i != j);
  }
}

TEST_CASE("gmauc formula cases") {
  for (double rate : {0.1, 0.5, 0.9}) CHECK(gmauc_from_parts(1.0, 1.0, rate) == 1.0);
  CHECK(gmauc_from_parts(0.8, 0.5, 0.3) == 0.0);
  CHECK(gmauc_from_parts(0.2, 0.9, 0.3) == 0.0);
  CHECK(gmauc_from_parts(0.65, 0.75, 0.3) == doctest::Approx(std::sqrt(0.5 * 0.5)));
  CHECK_THROWS_AS(gmauc_from_parts(0.5, 0.5, 0.0), UndefinedMetricError);
}

TEST_CASE("gmauc on snapshots") {
  // a_t: 0->1, 1->2, 2->3 ; a_next: 0->1, 3->0
  const auto a_t = build_adjacency({{0, 1}, {1, 2}, {2, 3}}, 4);
  const auto a_next = build_adjacency({{0, 1}, {3, 0}}, 4);
  MatrixD ideal = MatrixD::Zero(4, 4);
  ideal(0, 1) = 1.0;
  ideal(3, 0) = 1.0;
  CHECK(gmauc(ideal, a_t, a_next) == 1.0);
  CHECK(gmauc(MatrixD::Constant(4, 4, 0.3), a_t, a_next) == 0.0);
  const auto parts = gmauc_parts(ideal, a_t, a_next);
  CHECK(parts.added_rate == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_WITH_AS(gmauc(ideal, a_t, a_t), doctest::Contains("added"), UndefinedMetricError);
  CHECK_THROWS_WITH_AS(gmauc(ideal, DirectedSnapshot(4, 0), a_next), doctest::Contains("removed"), UndefinedMetricError);
  const auto disjoint = build_adjacency({{1, 0}}, 4);
  CHECK_THROWS_WITH_AS(gmauc(ideal, a_t, disjoint), doctest::Contains("persisted"), UndefinedMetricError);
}

TEST_CASE("gmauc stays in the unit interval") {
  ref::Rng rng(105);
  int evaluated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = ref::random_digraph(rng, 6, 0.4);
    const auto b = ref::random_digraph(rng, 6, 0.4);
    const auto s = ref::random_matrix(rng, 6, 6);
    try {
      const double g = gmauc(s, a, b);
      CHECK(g >= 0.0);
      CHECK(g <= 1.0);
      ++evaluated;
    } catch (const UndefinedMetricError&) {
    }
  }
  CHECK(evaluated > 150);
}

TEST_CASE("evaluate builds a report and tolerates undefined gmauc") {
  const auto a_t = build_adjacency({{0, 1}, {1, 2}}, 3);
  const auto a_next = build_adjacency({{0, 1}, {2, 0}}, 3);
  MatrixD s = MatrixD::Zero(3, 3);
  s(0, 1) = 2.0;
  s(2, 0) = 1.0;
  s(1, 1) = 100.0;  // diagonal is ignored
  const auto r = evaluate(s, a_t, a_next, 4, 9);
  CHECK(r.auc == 1.0);
  CHECK(r.prauc == 1.0);
  REQUIRE(r.gmauc.has_value());
  CHECK(*r.gmauc == 1.0);
  CHECK(r.counts.positives == 2);
  CHECK(r.counts.negatives == 4);
  CHECK(r.counts.added == 1);
  CHECK(r.counts.removed == 1);
  const auto json = to_json(r);
  CHECK(json.find("\"anchor_t\": 4") != std::string::npos);
  CHECK(json.find("\"gmauc\": 1.0") != std::string::npos);

  const auto same = evaluate(s, a_next, a_next, 4, 9);
  CHECK_FALSE(same.gmauc.has_value());
  CHECK(same.gmauc_note.find("added") != std::string::npos);
  CHECK(to_json(same).find("\"gmauc\": null") != std::string::npos);
}
