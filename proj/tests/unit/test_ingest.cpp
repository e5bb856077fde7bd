#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/reference.hpp"
#include "tsam/ingest.hpp"

using namespace tsam;

namespace {

EdgeList parse(const std::string& text, ParseOptions opts = {}) {
  std::istringstream in(text);
  return parse_edge_list(in, opts);
}

EdgeList at_times(const std::vector<std::int64_t>& ts) {
  std::string text;
  for (std::size_t k = 0; k < ts.size(); ++k)
    text += std::to_string(k % 3) + " " + std::to_string((k + 1) % 3) + " " + std::to_string(ts[k]) + "\n";
  return parse(text);
}

}  // namespace

TEST_CASE("parse a single edge with id remapping") {
  const auto el = parse("1 2 100\n");
  REQUIRE(el.edges.size() == 1);
  CHECK(el.edges[0].src == 0);
  CHECK(el.edges[0].dst == 1);
  CHECK(el.edges[0].timestamp == 100);
  CHECK(el.original_ids == std::vector<std::string>{"1", "2"});
}

TEST_CASE("comments, blank lines and weight column") {
  const auto el = parse("% comment\n# other\n\n  \n1 2 100 1\n2 7 105\n");
  REQUIRE(el.edges.size() == 2);
  CHECK(el.node_count() == 3);
  CHECK(el.edges[1].src == 1);
  CHECK(el.edges[1].dst == 2);
}

TEST_CASE("empty input gives an empty list") { CHECK(parse("").edges.empty()); }

TEST_CASE("malformed lines report their line number") {
  try {
    parse("% header\n1 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse("1 2 100\n1 2 abc\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("1 2 1.5\n"), ParseError);
}

TEST_CASE("decimal-formatted integral timestamps are accepted") { CHECK(parse("a b 1262454010.0\n").edges[0].timestamp == 1262454010); }

TEST_CASE("timestamp column option reads four-column dumps") {
  const auto el = parse("1 2 1 500\n", ParseOptions{3});
  CHECK(el.edges[0].timestamp == 500);
  CHECK_THROWS_AS(parse("1 2 1\n", ParseOptions{3}), ParseError);
  CHECK_THROWS_AS(parse("1 2 1\n", ParseOptions{1}), ParameterError);
}

TEST_CASE("missing file names the path") {
  try {
    load_edge_list("/nonexistent/edges.txt");
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/edges.txt") != std::string::npos);
  }
}

TEST_CASE("parse errors from files carry the path once") {
  const auto path = std::filesystem::temp_directory_path() / "tsam_bad_edges.txt";
  std::ofstream(path) << "1 2 3\n4 5\n";
  try {
    load_edge_list(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    CHECK(e.line() == 2);
    CHECK(what.find(path.string()) != std::string::npos);
    CHECK(what.find("line 2") == what.rfind("line 2"));
  }
  std::filesystem::remove(path);
}

TEST_CASE("one week of events lands in one snapshot") {
  const auto res = slice_snapshots(at_times({0, 1, 2, 3, 4, 5, 6}), SliceConfig{0, 7, std::nullopt});
  CHECK(res.sequence.size() == 1);
  CHECK(res.events_per_snapshot[0] == 7);
  CHECK(res.dropped == 0);
}

TEST_CASE("interval boundary goes right") {
  const auto res = slice_snapshots(at_times({0, 7}), SliceConfig{0, 7, std::nullopt});
  REQUIRE(res.sequence.size() == 2);
  CHECK(res.events_per_snapshot == std::vector<std::size_t>{1, 1});
  CHECK(res.sequence[1].has(1, 2));
}

TEST_CASE("origin defaults to the earliest timestamp and out-of-range events are dropped") {
  const auto el = at_times({100, 103, 110, 150});
  const auto res = slice_snapshots(el, SliceConfig{std::nullopt, 5, 3});
  CHECK(res.sequence.size() == 3);
  CHECK(res.events_per_snapshot == std::vector<std::size_t>{2, 0, 1});
  CHECK(res.dropped == 1);
  CHECK(res.sequence.n() == el.node_count());

  const auto before = slice_snapshots(el, SliceConfig{105, 5, std::nullopt});
  CHECK(before.dropped == 2);
  CHECK(before.sequence.size() == 10);
}

TEST_CASE("slicing errors") {
  CHECK_THROWS_AS(slice_snapshots(EdgeList{}, SliceConfig{}), EmptySliceError);
  CHECK_THROWS_AS(slice_snapshots(at_times({0, 1}), SliceConfig{100, 5, 2}), EmptySliceError);
  CHECK_THROWS_AS(slice_snapshots(at_times({0, 1}), SliceConfig{0, 0, std::nullopt}), ParameterError);
}

TEST_CASE("slicing conserves events and ignores input order") {
  ref::Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<std::int64_t> ts(0, 200);
    std::uniform_int_distribution<int> node(0, 6);
    EdgeList el;
    for (int k = 0; k < 7; ++k) el.original_ids.push_back(std::to_string(k));
    for (int k = 0; k < 60; ++k) el.edges.push_back({node(rng), node(rng), ts(rng)});
    const SliceConfig cfg{20, 13, 9};
    const auto a = slice_snapshots(el, cfg);
    CHECK(a.retained() + a.dropped == el.edges.size());

    auto shuffled = el;
    std::shuffle(shuffled.edges.begin(), shuffled.edges.end(), rng);
    const auto b = slice_snapshots(shuffled, cfg);
    CHECK(a.events_per_snapshot == b.events_per_snapshot);
    for (std::size_t t = 0; t < a.sequence.size(); ++t) CHECK(a.sequence[t] == b.sequence[t]);
  }
}
