#include "tsam/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace tsam {

namespace {

bool parse_int64(const std::string& token, std::int64_t& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc() && ptr == last) return true;
  // Some dumps write integral timestamps as "1262454010.0".
  double d = 0;
  auto [ptr2, ec2] = std::from_chars(first, last, d);
  if (ec2 != std::errc() || ptr2 != last || d != static_cast<double>(static_cast<std::int64_t>(d))) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

}  // namespace

EdgeList parse_edge_list(std::istream& in, const ParseOptions& opts) {
  if (opts.timestamp_column < 2)
    throw ParameterError("timestamp column must come after src and dst, got " +
                         std::to_string(opts.timestamp_column));
  EdgeList out;
  std::unordered_map<std::string, int> ids;
  auto remap = [&](const std::string& raw) {
    auto [it, inserted] = ids.try_emplace(raw, static_cast<int>(out.original_ids.size()));
    if (inserted) out.original_ids.push_back(raw);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '%' || line[start] == '#') continue;

    fields.clear();
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    if (static_cast<int>(fields.size()) <= opts.timestamp_column)
      throw ParseError(line_no, "expected at least " + std::to_string(opts.timestamp_column + 1) +
                                    " fields, found " + std::to_string(fields.size()));
    TemporalEdge e;
    if (!parse_int64(fields[static_cast<std::size_t>(opts.timestamp_column)], e.timestamp))
      throw ParseError(line_no, "malformed timestamp '" + fields[static_cast<std::size_t>(opts.timestamp_column)] + "'");
    e.src = remap(fields[0]);
    e.dst = remap(fields[1]);
    out.edges.push_back(e);
  }
  return out;
}

EdgeList load_edge_list(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list '" + path + "'");
  try {
    return parse_edge_list(in, opts);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail() + " (in " + path + ")");
  }
}

std::size_t SliceResult::retained() const {
  return std::accumulate(events_per_snapshot.begin(), events_per_snapshot.end(), std::size_t{0});
}

SliceResult slice_snapshots(const EdgeList& list, const SliceConfig& cfg) {
  if (cfg.duration <= 0) throw ParameterError("snapshot duration must be positive");
  if (cfg.count && *cfg.count <= 0) throw ParameterError("snapshot count must be positive");
  if (list.edges.empty()) throw EmptySliceError("no edges to slice");

  std::int64_t min_ts = list.edges.front().timestamp;
  std::int64_t max_ts = min_ts;
  for (const auto& e : list.edges) {
    min_ts = std::min(min_ts, e.timestamp);
    max_ts = std::max(max_ts, e.timestamp);
  }
  const std::int64_t origin = cfg.origin.value_or(min_ts);
  int count = 0;
  if (cfg.count) {
    count = *cfg.count;
  } else {
    if (max_ts < origin) throw EmptySliceError("every edge precedes the slicing origin");
    count = static_cast<int>((max_ts - origin) / cfg.duration) + 1;
  }

  const int n = list.node_count();
  std::vector<DirectedSnapshot> snaps;
  snaps.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) snaps.emplace_back(n, k);

  SliceResult res;
  res.events_per_snapshot.assign(static_cast<std::size_t>(count), 0);
  for (const auto& e : list.edges) {
    if (e.timestamp < origin) {
      ++res.dropped;
      continue;
    }
    const std::int64_t k = (e.timestamp - origin) / cfg.duration;
    if (k >= count) {
      ++res.dropped;
      continue;
    }
    snaps[static_cast<std::size_t>(k)].set(e.src, e.dst);
    ++res.events_per_snapshot[static_cast<std::size_t>(k)];
  }
  if (res.retained() == 0)
    throw EmptySliceError("all " + std::to_string(list.edges.size()) + " edges fall outside the sliced span");
  res.sequence = SnapshotSequence(n, std::move(snaps));
  return res;
}

}  // namespace tsam
