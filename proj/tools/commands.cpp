#include "commands.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "tsam/eval.hpp"
#include "tsam/model/checkpoint.hpp"
#include "tsam/model/model.hpp"
#include "tsam/train.hpp"
#include "tsam/version.hpp"

namespace tsam::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kCacheFormat = "tsam-snapshots/1";

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string source_key(const RunConfig& cfg, const std::string& dataset_sha) {
  ordered_json j;
  j["dataset_sha256"] = dataset_sha;
  j["timestamp_column"] = cfg.parse.timestamp_column;
  j["slice_origin"] = cfg.slice.origin ? json(*cfg.slice.origin) : json(nullptr);
  j["slice_duration"] = cfg.slice.duration;
  j["slice_count"] = cfg.slice.count ? json(*cfg.slice.count) : json(nullptr);
  return sha256_hex(j.dump());
}

void require_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("config has no 'dataset' path");
}

std::string job_name(int anchor, int rep) {
  return "anchor_" + std::to_string(anchor) + "_rep_" + std::to_string(rep);
}

struct Job {
  std::vector<int> anchors;  // several only when warm starting
  int rep = 0;
};

struct JobOutcome {
  int anchor = 0;
  int rep = 0;
  std::optional<EvalReport> report;
  std::string error_kind;  // divergence, undefined_metric, error
  std::string error;
  std::optional<int> diverged_epoch;
  std::vector<double> history;
  int epochs_run = 0;
};

std::string outcome_json(const JobOutcome& o) {
  if (o.report) {
    auto j = ordered_json::parse(to_json(*o.report));
    j["rep"] = o.rep;
    j["epochs"] = o.epochs_run;
    j["final_loss"] = o.history.empty() ? json(nullptr) : json(o.history.back());
    return j.dump(2);
  }
  ordered_json j;
  j["anchor_t"] = o.anchor;
  j["rep"] = o.rep;
  j["status"] = o.error_kind;
  j["error"] = o.error;
  if (o.diverged_epoch) j["epoch"] = *o.diverged_epoch;
  return j.dump(2);
}

std::string history_csv(const std::vector<double>& history) {
  std::string s = "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, history[e]);
    s += buf;
  }
  return s;
}

template <typename S>
std::vector<JobOutcome> run_job(const Job& job, const SnapshotSequence& seq, const ModelConfig& mcfg,
                                const RunConfig& cfg, const fs::path& out, bool save_first) {
  std::vector<JobOutcome> results;
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(job.rep);
  const Matrix<S> x = default_features<S>(mcfg.n);
  std::optional<ModelParams<S>> previous;

  for (std::size_t k = 0; k < job.anchors.size(); ++k) {
    const int t = job.anchors[k];
    JobOutcome o;
    o.anchor = t;
    o.rep = job.rep;
    TrainRun run;
    run.epochs = cfg.epochs;
    run.seed = seed;
    if (cfg.early_stop) run.early_stop = cfg.stop;
    else run.early_stop.reset();
    try {
      auto fit = fit_timestep<S>(seq, t, mcfg, run, x, previous ? &*previous : nullptr);
      o.history = fit.history;
      o.epochs_run = static_cast<int>(fit.history.size());
      const Matrix<S> scores = forward(window_ending_at(seq, mcfg.window, t), fit.params, mcfg, x);
      AucMode mode = cfg.auc_mode;
      mode.seed = seed;
      o.report = evaluate(scores.template cast<double>(), seq[static_cast<std::size_t>(t)],
                          seq[static_cast<std::size_t>(t) + 1], t, seed, mode);
      const bool keep = cfg.checkpoints == CheckpointPolicy::all || (save_first && k == 0);
      if (keep) {
        fs::create_directories(out / "checkpoints");
        save_checkpoint((out / "checkpoints" / (job_name(t, job.rep) + ".ckpt")).string(), mcfg, fit.params);
      }
      if (cfg.warm_start) previous = std::move(fit.params);
    } catch (const DivergenceError& e) {
      o.error_kind = "divergence";
      o.error = e.what();
      o.diverged_epoch = e.epoch();
      o.history = run.history;
      previous.reset();
    } catch (const UndefinedMetricError& e) {
      o.error_kind = "undefined_metric";
      o.error = e.what();
    }
    results.push_back(std::move(o));
  }
  return results;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

int worker_count(const RunConfig& cfg) {
  if (cfg.deterministic) return 1;
  if (cfg.threads > 0) return cfg.threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

AggregateRow aggregate(const std::string& label, const std::vector<const JobOutcome*>& outcomes) {
  AggregateRow row;
  row.anchor = label;
  std::vector<double> auc, prauc, gmauc;
  for (const auto* o : outcomes) {
    ++row.runs;
    if (!o->report) {
      ++row.failed;
      continue;
    }
    auc.push_back(o->report->auc);
    prauc.push_back(o->report->prauc);
    if (o->report->gmauc) gmauc.push_back(*o->report->gmauc);
  }
  row.auc = summarize(auc);
  row.prauc = summarize(prauc);
  row.gmauc = summarize(gmauc);
  return row;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string s = format_csv_row({"anchor", "runs", "failed", "auc_mean", "auc_std", "prauc_mean", "prauc_std",
                                  "gmauc_count", "gmauc_mean", "gmauc_std"});
  for (const auto& r : rows) {
    s += format_csv_row({r.anchor, std::to_string(r.runs), std::to_string(r.failed), fixed(r.auc.mean),
                         fixed(r.auc.std), fixed(r.prauc.mean), fixed(r.prauc.std), std::to_string(r.gmauc.count),
                         fixed(r.gmauc.mean), fixed(r.gmauc.std)});
  }
  return s;
}

std::string manifest_json(const RunConfig& cfg, const std::string& command, const CachedSequence& data,
                          int workers) {
  ordered_json j;
  j["tool"] = "tsam";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(cfg);
  j["config"] = ordered_json::parse(to_json(cfg));
  j["seed"] = cfg.seed;
  j["precision"] = cfg.precision;
  j["deterministic"] = cfg.deterministic;
  j["workers"] = workers;
  j["dataset"] = cfg.dataset;
  j["dataset_sha256"] = data.dataset_sha256;
  j["snapshot_cache"] = kCacheFormat;
  j["checkpoint_format"] = 1;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["compiler"] = __VERSION__;
  return j.dump(2) + "\n";
}

}  // namespace

RunConfig resolve(const std::string& config_path, const Overrides& o) {
  RunConfig cfg = load_run_config(config_path);
  if (!cfg.dataset.empty()) {
    fs::path p(cfg.dataset);
    if (p.is_relative()) cfg.dataset = (fs::path(config_path).parent_path() / p).lexically_normal().string();
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.precision) {
    if (*o.precision != 32 && *o.precision != 64) throw ConfigError("--precision must be 32 or 64");
    cfg.precision = *o.precision;
  }
  if (o.deterministic) cfg.deterministic = true;
  return cfg;
}

CachedSequence ingest_dataset(const RunConfig& cfg) {
  require_dataset(cfg);
  const std::string bytes = read_file(cfg.dataset, "edge list");
  std::istringstream in(bytes);
  EdgeList list;
  try {
    list = parse_edge_list(in, cfg.parse);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail() + " (in " + cfg.dataset + ")");
  }
  SliceResult sliced;
  try {
    sliced = slice_snapshots(list, cfg.slice);
  } catch (const Error& e) {
    throw EmptySliceError(cfg.dataset + ": " + e.what());
  }
  CachedSequence c;
  c.sequence = std::move(sliced.sequence);
  c.ids = std::move(list.original_ids);
  c.events = std::move(sliced.events_per_snapshot);
  c.dropped = sliced.dropped;
  c.raw_links = static_cast<long long>(list.edges.size());
  c.dataset_sha256 = sha256_hex(bytes);
  c.source_key = source_key(cfg, c.dataset_sha256);
  return c;
}

void write_cache(const fs::path& path, const CachedSequence& c) {
  ordered_json j;
  j["format"] = kCacheFormat;
  j["source_key"] = c.source_key;
  j["dataset_sha256"] = c.dataset_sha256;
  j["n"] = c.sequence.n();
  j["raw_links"] = c.raw_links;
  j["dropped"] = c.dropped;
  j["ids"] = c.ids;
  auto snaps = json::array();
  for (std::size_t t = 0; t < c.sequence.size(); ++t) {
    auto links = json::array();
    for (auto [i, j2] : c.sequence[t].links()) links.push_back({i, j2});
    snaps.push_back({{"events", c.events.at(t)}, {"links", links}});
  }
  j["snapshots"] = snaps;
  write_file(path, j.dump() + "\n");
}

CachedSequence read_cache(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path.string(), "snapshot cache"));
    if (j.at("format") != kCacheFormat) throw Error("unsupported snapshot cache format in '" + path.string() + "'");
    CachedSequence c;
    const int n = j.at("n").get<int>();
    c.source_key = j.at("source_key").get<std::string>();
    c.dataset_sha256 = j.at("dataset_sha256").get<std::string>();
    c.raw_links = j.at("raw_links").get<long long>();
    c.dropped = j.at("dropped").get<std::size_t>();
    c.ids = j.at("ids").get<std::vector<std::string>>();
    std::vector<DirectedSnapshot> snaps;
    for (const auto& s : j.at("snapshots")) {
      DirectedSnapshot a(n, static_cast<int>(snaps.size()));
      for (const auto& l : s.at("links")) {
        const int i = l.at(0).get<int>(), k = l.at(1).get<int>();
        if (i < 0 || i >= n || k < 0 || k >= n) throw Error("node index out of range in '" + path.string() + "'");
        a.set(i, k);
      }
      c.events.push_back(s.at("events").get<std::size_t>());
      snaps.push_back(std::move(a));
    }
    c.sequence = SnapshotSequence(n, std::move(snaps));
    return c;
  } catch (const json::exception& e) {
    throw Error("corrupt snapshot cache '" + path.string() + "': " + e.what());
  }
}

CachedSequence ensure_sequence(const RunConfig& cfg, std::ostream& log) {
  require_dataset(cfg);
  const fs::path cache = fs::path(cfg.out) / "snapshots.json";
  if (fs::exists(cache)) {
    const std::string key = source_key(cfg, sha256_hex(read_file(cfg.dataset, "edge list")));
    try {
      auto c = read_cache(cache);
      if (c.source_key == key) return c;
      log << "snapshot cache is stale, re-ingesting\n";
    } catch (const Error& e) {
      log << e.what() << ", re-ingesting\n";
    }
  }
  auto c = ingest_dataset(cfg);
  write_cache(cache, c);
  return c;
}

std::string stats_json(const CachedSequence& c) {
  const auto s = network_stats(c.sequence, c.raw_links);
  ordered_json j;
  j["node_count"] = s.node_count;
  j["link_count"] = s.link_count;
  j["average_degree"] = s.average_degree;
  j["snapshot_count"] = s.snapshot_count;
  j["dropped_events"] = c.dropped;
  return j.dump(2) + "\n";
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) {
    s.mean = s.std = std::nan("");
    return s;
  }
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) {
    s.std = std::nan("");
    return s;
  }
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return s;
}

std::string fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_csv_row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      s += c;
      continue;
    }
    s += '"';
    for (char ch : c) {
      if (ch == '"') s += '"';
      s += ch;
    }
    s += '"';
  }
  return s + "\n";
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  auto c = ingest_dataset(cfg);
  const fs::path dir(cfg.out);
  write_cache(dir / "snapshots.json", c);
  const auto stats = stats_json(c);
  write_file(dir / "stats.json", stats);
  log << "wrote " << (dir / "snapshots.json").string() << " and " << (dir / "stats.json").string() << "\n";
  out << stats;
  return kOk;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const fs::path cache = fs::path(cfg.out) / "snapshots.json";
  if (cfg.dataset.empty() && fs::exists(cache)) {
    out << stats_json(read_cache(cache));
    return kOk;
  }
  out << stats_json(ensure_sequence(cfg, log));
  return kOk;
}

TrainEvalResult run_train_eval(const RunConfig& cfg, std::ostream& log) {
  const auto data = ensure_sequence(cfg, log);
  const auto& seq = data.sequence;
  const auto mcfg = model_for(cfg, seq.n());
  const auto anchors = anchors_for(cfg, static_cast<int>(seq.size()));
  const fs::path out(cfg.out);
  fs::create_directories(out / "reports");
  fs::create_directories(out / "history");

  std::vector<Job> jobs;
  for (int r = 0; r < cfg.repetitions; ++r) {
    if (cfg.warm_start) jobs.push_back({anchors, r});
    else
      for (int t : anchors) jobs.push_back({{t}, r});
  }

  const int workers = worker_count(cfg);
  write_file(out / "manifest.json", manifest_json(cfg, "train-eval", data, workers));
  log << "n=" << seq.n() << " snapshots=" << seq.size() << " anchors=" << anchors.front() << ".." << anchors.back()
      << " repetitions=" << cfg.repetitions << " workers=" << workers << "\n";

  std::vector<std::vector<JobOutcome>> outcomes(jobs.size());
  std::mutex io_mu;
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const bool first = jobs[i].rep == 0 && (cfg.warm_start || jobs[i].anchors.front() == anchors.front());
    const bool save_first = cfg.checkpoints == CheckpointPolicy::first && first;
    auto res = cfg.precision == 32 ? run_job<float>(jobs[i], seq, mcfg, cfg, out, save_first)
                                   : run_job<double>(jobs[i], seq, mcfg, cfg, out, save_first);
    std::lock_guard lock(io_mu);
    for (const auto& o : res) {
      const auto name = job_name(o.anchor, o.rep);
      write_file(out / "reports" / (name + ".json"), outcome_json(o) + "\n");
      write_file(out / "history" / (name + ".csv"), history_csv(o.history));
      log << name << ": ";
      if (o.report) {
        log << "auc=" << fixed(o.report->auc) << " gmauc=" << (o.report->gmauc ? fixed(*o.report->gmauc) : "n/a")
            << " epochs=" << o.epochs_run << "\n";
      } else {
        log << o.error_kind << ": " << o.error << "\n";
      }
    }
    outcomes[i] = std::move(res);
  });

  TrainEvalResult result;
  std::vector<const JobOutcome*> all;
  for (int t : anchors) {
    std::vector<const JobOutcome*> at;
    for (const auto& batch : outcomes)
      for (const auto& o : batch)
        if (o.anchor == t) at.push_back(&o);
    // jobs are stored rep-major; order rows by rep for stable sums
    std::sort(at.begin(), at.end(), [](auto* a, auto* b) { return a->rep < b->rep; });
    result.rows.push_back(aggregate(std::to_string(t), at));
    all.insert(all.end(), at.begin(), at.end());
  }
  result.rows.push_back(aggregate("all", all));
  write_file(out / "aggregate.csv", aggregate_csv(result.rows));

  bool diverged = false;
  for (const auto* o : all) diverged = diverged || o->error_kind == "divergence";
  if (diverged) result.exit_code = kDivergence;
  else if (result.rows.back().failed == result.rows.back().runs) result.exit_code = kDataError;
  return result;
}

int cmd_train_eval(const RunConfig& cfg, std::ostream& log) {
  const auto res = run_train_eval(cfg, log);
  const auto& all = res.rows.back();
  log << "AUC " << fixed(all.auc.mean) << " +/- " << fixed(all.auc.std) << ", GMAUC " << fixed(all.gmauc.mean)
      << " +/- " << fixed(all.gmauc.std) << " over " << all.runs - all.failed << " runs\n";
  return res.exit_code;
}

AblationAxis parse_axis(const std::string& name) {
  if (name == "transforms") return AblationAxis::transforms;
  if (name == "node_heads") return AblationAxis::node_heads;
  if (name == "time_heads") return AblationAxis::time_heads;
  throw ConfigError("unknown ablation axis '" + name + "', expected transforms, node_heads or time_heads");
}

namespace {

std::vector<TransformKind> transform_set(const std::string& value) {
  std::vector<TransformKind> out;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(std::remove_if(part.begin(), part.end(), [](unsigned char ch) { return std::isspace(ch); }),
               part.end());
    if (part.empty() || part == "none") continue;
    try {
      out.push_back(parse_transform_kind(part));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

int head_count(const std::string& value) {
  int k = 0;
  try {
    std::size_t used = 0;
    k = std::stoi(value, &used);
    if (used != value.size()) k = 0;
  } catch (const std::exception&) {
    k = 0;
  }
  if (k != 1 && k != 2 && k != 4 && k != 8 && k != 16)
    throw ConfigError("head count '" + value + "' must be one of 1, 2, 4, 8, 16");
  return k;
}

std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out.empty() ? "none" : out;
}

}  // namespace

std::string ablation_label(AblationAxis axis, const std::string& value) {
  switch (axis) {
    case AblationAxis::transforms: {
      const auto set = transform_set(value);
      if (set.empty()) return "No feature";
      std::string s = "{";
      for (std::size_t i = 0; i < set.size(); ++i) s += (i ? ", C^" : "C^") + to_string(set[i]);
      return s + "}";
    }
    case AblationAxis::node_heads: return "K_N=" + std::to_string(head_count(value));
    case AblationAxis::time_heads: return "K_T=" + std::to_string(head_count(value));
  }
  return value;
}

RunConfig ablation_variant(const RunConfig& cfg, AblationAxis axis, const std::string& value) {
  RunConfig v = cfg;
  switch (axis) {
    case AblationAxis::transforms: v.model.transforms = transform_set(value); break;
    case AblationAxis::node_heads: v.model.k_node = head_count(value); break;
    case AblationAxis::time_heads: v.model.k_time = head_count(value); break;
  }
  return v;
}

int cmd_ablate(const RunConfig& cfg, AblationAxis axis, const std::vector<std::string>& values, std::ostream& log) {
  if (values.empty()) throw ConfigError("ablate needs at least one value");
  const char* axis_name = axis == AblationAxis::transforms ? "transforms"
                          : axis == AblationAxis::node_heads ? "node_heads"
                                                             : "time_heads";
  // validate every value before spending time on training
  std::vector<RunConfig> variants;
  std::vector<std::string> labels;
  for (const auto& value : values) {
    variants.push_back(ablation_variant(cfg, axis, value));
    labels.push_back(ablation_label(axis, value));
  }

  const fs::path root = fs::path(cfg.out) / (std::string("ablate_") + axis_name);
  const auto data = ensure_sequence(cfg, log);
  std::string csv = format_csv_row({"axis", "value", "label", "runs", "failed", "auc_mean", "auc_std", "prauc_mean",
                                    "prauc_std", "gmauc_mean", "gmauc_std"});
  int code = kOk;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& v = variants[i];
    v.out = (root / (std::to_string(i) + "_" + slug(values[i]))).string();
    fs::create_directories(v.out);
    write_cache(fs::path(v.out) / "snapshots.json", data);
    log << "[" << labels[i] << "]\n";
    const auto res = run_train_eval(v, log);
    const auto& all = res.rows.back();
    csv += format_csv_row({axis_name, values[i], labels[i], std::to_string(all.runs), std::to_string(all.failed),
                           fixed(all.auc.mean), fixed(all.auc.std), fixed(all.prauc.mean), fixed(all.prauc.std),
                           fixed(all.gmauc.mean), fixed(all.gmauc.std)});
    code = std::max(code, res.exit_code);
  }
  write_file(fs::path(cfg.out) / (std::string("ablation_") + axis_name + ".csv"), csv);
  return code;
}

}  // namespace tsam::cli
