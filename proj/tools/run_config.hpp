#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsam/eval.hpp"
#include "tsam/ingest.hpp"
#include "tsam/model/config.hpp"
#include "tsam/train.hpp"

namespace tsam::cli {

// Bad config file, unknown key or out-of-range setting. Maps to the usage
// exit code.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class CheckpointPolicy { none, first, all };

struct RunConfig {
  std::string dataset;
  std::string preset;  // MAN, EEC, UCI, LEM or empty
  ParseOptions parse;
  SliceConfig slice;

  // ModelConfig fields except n and f_in, which come from the data.
  ModelConfig model;

  int epochs = 200;
  bool early_stop = true;
  EarlyStop stop;
  bool warm_start = false;

  std::optional<int> anchor_first;  // defaults to the first valid anchor, window
  std::optional<int> anchor_last;   // defaults to the last valid anchor, length - 2
  int repetitions = 5;
  AucMode auc_mode;
  CheckpointPolicy checkpoints = CheckpointPolicy::first;

  std::uint64_t seed = 0;
  int precision = 64;
  bool deterministic = false;
  int threads = 0;  // 0 uses the hardware concurrency
  std::string out = "tsam_out";
};

struct PresetInfo {
  const char* name;
  int nodes;
  long long links;
  std::int64_t duration;  // seconds per snapshot
  int snapshots;
  int window;
  int f_struct, h_rnn, f_attn, k_node, k_time, h_dec;
  double lr, l2;
};

const std::vector<PresetInfo>& presets();
const PresetInfo* find_preset(const std::string& name);

// Parses a flat JSON object. A "preset" key applies that dataset's settings
// first; every other key then overrides.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Canonical JSON of every resolved setting, keys in a fixed order.
std::string to_json(const RunConfig& cfg);

// SHA-256 of to_json(cfg), hex encoded.
std::string config_hash(const RunConfig& cfg);
std::string sha256_hex(const std::string& bytes);

// Model settings for a sequence of `n` nodes with one-hot features.
ModelConfig model_for(const RunConfig& cfg, int n);

// Anchors to evaluate for a sequence of `length` snapshots. Throws
// ConfigError when the configured range leaves [window, length - 2].
std::vector<int> anchors_for(const RunConfig& cfg, int length);

}  // namespace tsam::cli
