#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"
#include "tsam/graph.hpp"

namespace tsam::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDivergence = 3 };

// Command-line flags layered over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> precision;
  bool deterministic = false;
};

RunConfig resolve(const std::string& config_path, const Overrides& o);

struct CachedSequence {
  SnapshotSequence sequence;
  std::vector<std::string> ids;
  std::vector<std::size_t> events;
  std::size_t dropped = 0;
  long long raw_links = 0;  // parsed events, before slicing
  std::string dataset_sha256;
  std::string source_key;
};

// Parses and slices cfg.dataset.
CachedSequence ingest_dataset(const RunConfig& cfg);

void write_cache(const std::filesystem::path& path, const CachedSequence& c);
CachedSequence read_cache(const std::filesystem::path& path);

// Loads <out>/snapshots.json when it was built from the same file and slice
// settings; otherwise ingests and rewrites it.
CachedSequence ensure_sequence(const RunConfig& cfg, std::ostream& log);

std::string stats_json(const CachedSequence& c);

// Summary statistics of one column of results.
struct Summary {
  std::size_t count = 0;
  double mean = 0;
  double std = 0;  // sample standard deviation, NaN below two values
};
Summary summarize(const std::vector<double>& v);

struct AggregateRow {
  std::string anchor;  // anchor index, or "all"
  std::size_t runs = 0;
  std::size_t failed = 0;
  Summary auc, prauc, gmauc;
};

struct TrainEvalResult {
  std::vector<AggregateRow> rows;  // one per anchor, then "all"
  int exit_code = kOk;
};

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& log);
TrainEvalResult run_train_eval(const RunConfig& cfg, std::ostream& log);
int cmd_train_eval(const RunConfig& cfg, std::ostream& log);

enum class AblationAxis { transforms, node_heads, time_heads };
AblationAxis parse_axis(const std::string& name);  // ConfigError on unknown names

// "No feature", "{C^M1}", "K_N=4", ...
std::string ablation_label(AblationAxis axis, const std::string& value);

// Applies one ablation value to a copy of cfg. Head counts must be one of
// 1, 2, 4, 8, 16.
RunConfig ablation_variant(const RunConfig& cfg, AblationAxis axis, const std::string& value);

int cmd_ablate(const RunConfig& cfg, AblationAxis axis, const std::vector<std::string>& values, std::ostream& log);

std::string format_csv_row(const std::vector<std::string>& cells);
std::string fixed(double v);

}  // namespace tsam::cli
