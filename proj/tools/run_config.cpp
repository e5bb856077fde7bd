#include "run_config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace tsam::cli {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> table = {
      {"MAN", 167, 81127, 7 * 86400, 38, 8, 32, 1024, 256, 4, 8, 128, 0.001, 0.0},
      {"EEC", 964, 291167, 7 * 86400, 64, 8, 64, 4096, 1024, 2, 4, 512, 0.001, 1e-5},
      {"UCI", 889, 10034, 3 * 86400, 40, 5, 64, 4096, 1024, 2, 4, 512, 0.001, 1e-5},
      // half of a 365.25-day year
      {"LEM", 485, 196364, 15778800, 50, 8, 32, 2048, 512, 4, 8, 256, 0.005, 0.0},
  };
  return table;
}

const PresetInfo* find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (name == p.name) return &p;
  return nullptr;
}

namespace {

void apply_preset(RunConfig& cfg, const PresetInfo& p) {
  cfg.preset = p.name;
  cfg.slice.duration = p.duration;
  cfg.slice.count = p.snapshots;
  cfg.model.window = p.window;
  cfg.model.f_struct = p.f_struct;
  cfg.model.h_rnn = p.h_rnn;
  cfg.model.f_attn = p.f_attn;
  cfg.model.k_node = p.k_node;
  cfg.model.k_time = p.k_time;
  cfg.model.h_dec = p.h_dec;
  cfg.model.lr = p.lr;
  cfg.model.l2 = p.l2;
}

std::vector<TransformKind> parse_transforms(const json& v) {
  std::vector<TransformKind> out;
  auto add = [&out](std::string name) {
    const auto b = name.find_first_not_of(" \t");
    const auto e = name.find_last_not_of(" \t");
    name = b == std::string::npos ? "" : name.substr(b, e - b + 1);
    if (name.empty() || name == "none") return;
    out.push_back(parse_transform_kind(name));
  };
  if (v.is_array()) {
    for (const auto& item : v) add(item.get<std::string>());
  } else {
    std::stringstream ss(v.get<std::string>());
    std::string part;
    while (std::getline(ss, part, ',')) add(part);
  }
  return out;
}

template <typename T>
std::optional<T> optional_value(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

const char* policy_name(CheckpointPolicy p) {
  switch (p) {
    case CheckpointPolicy::none: return "none";
    case CheckpointPolicy::first: return "first";
    case CheckpointPolicy::all: return "all";
  }
  return "?";
}

template <typename T>
json nullable(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig cfg;
  if (j.contains("preset")) {
    const auto name = j["preset"].get<std::string>();
    const auto* p = find_preset(name);
    if (!p) throw ConfigError("unknown preset '" + name + "', expected MAN, EEC, UCI or LEM");
    apply_preset(cfg, *p);
  }

  auto& m = cfg.model;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "preset") continue;
      else if (key == "dataset") cfg.dataset = v.get<std::string>();
      else if (key == "timestamp_column") cfg.parse.timestamp_column = v.get<int>();
      else if (key == "slice_origin") cfg.slice.origin = optional_value<std::int64_t>(v);
      else if (key == "slice_duration") cfg.slice.duration = v.get<std::int64_t>();
      else if (key == "slice_count") cfg.slice.count = optional_value<int>(v);
      else if (key == "f_struct") m.f_struct = v.get<int>();
      else if (key == "h_rnn") m.h_rnn = v.get<int>();
      else if (key == "f_attn") m.f_attn = v.get<int>();
      else if (key == "k_node") m.k_node = v.get<int>();
      else if (key == "k_time") m.k_time = v.get<int>();
      else if (key == "h_dec") m.h_dec = v.get<int>();
      else if (key == "window") m.window = v.get<int>();
      else if (key == "transforms") m.transforms = parse_transforms(v);
      else if (key == "lr") m.lr = v.get<double>();
      else if (key == "l2") m.l2 = v.get<double>();
      else if (key == "penalty_beta") m.penalty_beta = v.get<double>();
      else if (key == "output_bias") m.output_bias = v.get<double>();
      else if (key == "epochs") cfg.epochs = v.get<int>();
      else if (key == "early_stop") cfg.early_stop = v.get<bool>();
      else if (key == "patience") cfg.stop.patience = v.get<int>();
      else if (key == "min_delta") cfg.stop.min_delta = v.get<double>();
      else if (key == "warm_start") cfg.warm_start = v.get<bool>();
      else if (key == "anchor_first") cfg.anchor_first = optional_value<int>(v);
      else if (key == "anchor_last") cfg.anchor_last = optional_value<int>(v);
      else if (key == "repetitions") cfg.repetitions = v.get<int>();
      else if (key == "auc_mode") {
        const auto mode = v.get<std::string>();
        if (mode == "exact") cfg.auc_mode.kind = AucMode::Kind::exact;
        else if (mode == "sampled") cfg.auc_mode.kind = AucMode::Kind::sampled;
        else throw ConfigError("auc_mode must be 'exact' or 'sampled'");
      } else if (key == "auc_samples") cfg.auc_mode.samples = v.get<std::size_t>();
      else if (key == "checkpoints") {
        const auto p = v.get<std::string>();
        if (p == "none") cfg.checkpoints = CheckpointPolicy::none;
        else if (p == "first") cfg.checkpoints = CheckpointPolicy::first;
        else if (p == "all") cfg.checkpoints = CheckpointPolicy::all;
        else throw ConfigError("checkpoints must be 'none', 'first' or 'all'");
      } else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "precision") cfg.precision = v.get<int>();
      else if (key == "deterministic") cfg.deterministic = v.get<bool>();
      else if (key == "threads") cfg.threads = v.get<int>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    } catch (const ParameterError& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }

  if (cfg.precision != 32 && cfg.precision != 64) throw ConfigError("precision must be 32 or 64");
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (cfg.epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (cfg.slice.duration <= 0) throw ConfigError("slice_duration must be positive");
  if (cfg.auc_mode.kind == AucMode::Kind::sampled && cfg.auc_mode.samples == 0)
    cfg.auc_mode.samples = 100000;
  if (cfg.threads < 0) throw ConfigError("threads must be nonnegative");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string to_json(const RunConfig& cfg) {
  ordered_json j;
  j["dataset"] = cfg.dataset;
  j["preset"] = cfg.preset;
  j["timestamp_column"] = cfg.parse.timestamp_column;
  j["slice_origin"] = nullable(cfg.slice.origin);
  j["slice_duration"] = cfg.slice.duration;
  j["slice_count"] = nullable(cfg.slice.count);
  const auto& m = cfg.model;
  j["f_struct"] = m.f_struct;
  j["h_rnn"] = m.h_rnn;
  j["f_attn"] = m.f_attn;
  j["k_node"] = m.k_node;
  j["k_time"] = m.k_time;
  j["h_dec"] = m.h_dec;
  j["window"] = m.window;
  auto kinds = json::array();
  for (auto k : m.transforms) kinds.push_back(to_string(k));
  j["transforms"] = kinds;
  j["lr"] = m.lr;
  j["l2"] = m.l2;
  j["penalty_beta"] = m.penalty_beta;
  j["output_bias"] = m.output_bias;
  j["epochs"] = cfg.epochs;
  j["early_stop"] = cfg.early_stop;
  j["patience"] = cfg.stop.patience;
  j["min_delta"] = cfg.stop.min_delta;
  j["warm_start"] = cfg.warm_start;
  j["anchor_first"] = nullable(cfg.anchor_first);
  j["anchor_last"] = nullable(cfg.anchor_last);
  j["repetitions"] = cfg.repetitions;
  j["auc_mode"] = cfg.auc_mode.kind == AucMode::Kind::exact ? "exact" : "sampled";
  j["auc_samples"] = cfg.auc_mode.samples;
  j["checkpoints"] = policy_name(cfg.checkpoints);
  j["seed"] = cfg.seed;
  j["precision"] = cfg.precision;
  return j.dump();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(to_json(cfg)); }

ModelConfig model_for(const RunConfig& cfg, int n) {
  ModelConfig m = cfg.model;
  m.n = n;
  m.f_in = n;
  try {
    m.validate();
  } catch (const ResourceError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return m;
}

std::vector<int> anchors_for(const RunConfig& cfg, int length) {
  const int lo = cfg.model.window;
  const int hi = length - 2;
  if (hi < lo)
    throw ConfigError("sequence of " + std::to_string(length) + " snapshots is too short for window " +
                      std::to_string(lo));
  const int first = cfg.anchor_first.value_or(lo);
  const int last = cfg.anchor_last.value_or(hi);
  if (first < lo || last > hi || first > last)
    throw ConfigError("anchor range [" + std::to_string(first) + ", " + std::to_string(last) + "] must lie within [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  std::vector<int> out;
  for (int t = first; t <= last; ++t) out.push_back(t);
  return out;
}

}  // namespace tsam::cli
