#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "commands.hpp"

using namespace tsam;
using namespace tsam::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = TSAM_FIXTURES;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tsam_cli_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig fixture_config(const std::string& name, const fs::path& out) {
  Overrides o;
  o.out = out.string();
  o.deterministic = true;
  return resolve((kFixtures / name).string(), o);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("presets carry the per-network settings") {
  const auto cfg = parse_run_config(R"({"preset": "MAN"})");
  CHECK(cfg.slice.duration == 604800);
  CHECK(cfg.slice.count == 38);
  CHECK(cfg.model.window == 8);
  CHECK(cfg.model.h_rnn == 1024);
  CHECK(cfg.model.k_time == 8);
  const auto uci = parse_run_config(R"({"preset": "UCI", "h_rnn": 64})");
  CHECK(uci.model.h_rnn == 64);
  CHECK(uci.model.window == 5);
  CHECK(uci.model.l2 == 1e-5);
  CHECK(uci.slice.duration == 3 * 86400);
  CHECK(find_preset("LEM")->lr == 0.005);
  CHECK(find_preset("XYZ") == nullptr);
}

TEST_CASE("config parsing rejects bad input") {
  CHECK_THROWS_AS(parse_run_config(R"({"widow": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"window": "three"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"preset": "ABC"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"precision": 16})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"transforms": ["M5"]})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK(parse_run_config(R"({"transforms": "none"})").model.transforms.empty());
  CHECK(parse_run_config(R"({"transforms": "M3, M1"})").model.transforms ==
        std::vector<TransformKind>{TransformKind::M3, TransformKind::M1});
}

TEST_CASE("config hash follows every setting") {
  const auto a = parse_run_config(R"({"seed": 1})");
  const auto b = parse_run_config(R"({"seed": 2})");
  CHECK(config_hash(a) == config_hash(parse_run_config(R"({"seed": 1})")));
  CHECK(config_hash(a) != config_hash(b));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("anchor range must lie in [window, length - 2]") {
  auto cfg = parse_run_config(R"({"window": 3})");
  CHECK(anchors_for(cfg, 12) == std::vector<int>{3, 4, 5, 6, 7, 8, 9, 10});
  cfg.anchor_first = 5;
  cfg.anchor_last = 5;
  CHECK(anchors_for(cfg, 12) == std::vector<int>{5});
  cfg.anchor_last = 11;
  CHECK_THROWS_AS(anchors_for(cfg, 12), ConfigError);
  cfg.anchor_first = 2;
  cfg.anchor_last = 4;
  CHECK_THROWS_AS(anchors_for(cfg, 12), ConfigError);
  CHECK_THROWS_AS(anchors_for(parse_run_config(R"({"window": 3})"), 4), ConfigError);
}

TEST_CASE("summarize uses the sample standard deviation") {
  const auto s = summarize({1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(std::isnan(summarize({1}).std));
  CHECK(std::isnan(summarize({}).mean));
  CHECK(fixed(0.5) == "0.500000");
  CHECK(fixed(std::nan("")) == "nan");
  CHECK(format_csv_row({"a", "b,c", "d\"e"}) == "a,\"b,c\",\"d\"\"e\"\n");
}

TEST_CASE("ingest the tiny fixture") {
  const auto out = scratch("ingest");
  const auto cfg = fixture_config("tiny.json", out);
  std::ostringstream stdout_, log;
  CHECK(cmd_ingest(cfg, stdout_, log) == kOk);
  const auto stats = nlohmann::json::parse(slurp(out / "stats.json"));
  CHECK(stats["node_count"] == 3);
  CHECK(stats["snapshot_count"] == 2);
  CHECK(stats["link_count"] == 3);
  const auto cache = read_cache(out / "snapshots.json");
  CHECK(cache.sequence.n() == 3);
  CHECK(cache.sequence.size() == 2);
  CHECK(cache.sequence[0].has(0, 1));
  CHECK(cache.sequence[0].has(1, 2));
  CHECK(cache.sequence[1].has(2, 0));
  CHECK(cache.ids == std::vector<std::string>{"a", "b", "c"});
  fs::remove_all(out);
}

TEST_CASE("missing dataset names the path") {
  auto cfg = parse_run_config(R"({"dataset": "/definitely/not/here.edges"})");
  std::ostringstream s, log;
  try {
    cmd_ingest(cfg, s, log);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/definitely/not/here.edges") != std::string::npos);
  }
}

TEST_CASE("train-eval fills mean and std across repetitions") {
  const auto out = scratch("train_eval");
  const auto cfg = fixture_config("periodic.json", out);
  std::ostringstream log;
  const auto res = run_train_eval(cfg, log);
  CHECK(res.exit_code == kOk);
  REQUIRE(res.rows.size() == 3);
  CHECK(res.rows.back().anchor == "all");
  CHECK(res.rows.back().runs == 4);
  CHECK(res.rows.back().failed == 0);

  std::istringstream csv(slurp(out / "aggregate.csv"));
  std::string line;
  std::getline(csv, line);
  const auto header = split_csv_line(line);
  CHECK(header[3] == "auc_mean");
  CHECK(header[4] == "auc_std");
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto cells = split_csv_line(line);
    REQUIRE(cells.size() == header.size());
    for (std::size_t k = 3; k < cells.size(); ++k) CHECK(cells[k] != "nan");
    ++rows;
  }
  CHECK(rows == 3);
  for (const char* name : {"manifest.json", "reports/anchor_8_rep_1.json", "history/anchor_9_rep_0.csv"})
    CHECK(fs::exists(out / name));
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config_hash"] == config_hash(cfg));
  CHECK(manifest["seed"] == cfg.seed);
  fs::remove_all(out);
}

TEST_CASE("an anchor range of one gives one report") {
  const auto out = scratch("one_anchor");
  auto cfg = fixture_config("periodic.json", out);
  cfg.anchor_first = cfg.anchor_last = 7;
  cfg.repetitions = 1;
  cfg.checkpoints = CheckpointPolicy::first;
  std::ostringstream log;
  run_train_eval(cfg, log);
  std::size_t reports = 0;
  for (const auto& e : fs::directory_iterator(out / "reports")) reports += e.is_regular_file();
  CHECK(reports == 1);
  CHECK(fs::exists(out / "reports" / "anchor_7_rep_0.json"));
  CHECK(fs::exists(out / "checkpoints" / "anchor_7_rep_0.ckpt"));
  fs::remove_all(out);
}

TEST_CASE("warm start chains anchors and matches the report layout") {
  const auto out = scratch("warm");
  auto cfg = fixture_config("periodic.json", out);
  cfg.warm_start = true;
  cfg.repetitions = 1;
  std::ostringstream log;
  const auto res = run_train_eval(cfg, log);
  CHECK(res.rows.back().runs == 2);
  CHECK(fs::exists(out / "reports" / "anchor_9_rep_0.json"));
  fs::remove_all(out);
}

TEST_CASE("ablation values and labels") {
  CHECK_THROWS_AS(parse_axis("heads"), ConfigError);
  CHECK(ablation_label(AblationAxis::transforms, "none") == "No feature");
  CHECK(ablation_label(AblationAxis::transforms, "M1") == "{C^M1}");
  CHECK(ablation_label(AblationAxis::transforms, "M1,M2,M3,M4") == "{C^M1, C^M2, C^M3, C^M4}");
  CHECK(ablation_label(AblationAxis::node_heads, "4") == "K_N=4");
  CHECK_THROWS_AS(ablation_variant(RunConfig{}, AblationAxis::node_heads, "3"), ConfigError);
  CHECK_THROWS_AS(ablation_variant(RunConfig{}, AblationAxis::time_heads, "2x"), ConfigError);
  CHECK(ablation_variant(RunConfig{}, AblationAxis::time_heads, "16").model.k_time == 16);
  CHECK(ablation_variant(RunConfig{}, AblationAxis::transforms, "none").model.transforms.empty());
}

TEST_CASE("node head ablation writes one row per value") {
  const auto out = scratch("ablate");
  auto cfg = fixture_config("periodic.json", out);
  cfg.repetitions = 1;
  cfg.anchor_last = 8;
  std::ostringstream log;
  CHECK(cmd_ablate(cfg, AblationAxis::node_heads, {"1", "2", "4"}, log) == kOk);
  std::istringstream csv(slurp(out / "ablation_node_heads.csv"));
  std::string line;
  std::vector<std::string> labels;
  std::getline(csv, line);
  while (std::getline(csv, line)) labels.push_back(split_csv_line(line)[2]);
  CHECK(labels == std::vector<std::string>{"K_N=1", "K_N=2", "K_N=4"});
  fs::remove_all(out);
}
