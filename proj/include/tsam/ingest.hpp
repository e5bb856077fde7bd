#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsam/graph.hpp"

namespace tsam {

struct TemporalEdge {
  int src = 0;
  int dst = 0;
  std::int64_t timestamp = 0;
};

// Parsed edges with node ids remapped to 0..N-1 in order of first
// appearance; original_ids[k] is the id the file used for node k.
struct EdgeList {
  std::vector<TemporalEdge> edges;
  std::vector<std::string> original_ids;

  int node_count() const { return static_cast<int>(original_ids.size()); }
};

struct ParseOptions {
  // Zero-based column holding the timestamp. Columns after it are ignored.
  int timestamp_column = 2;
};

// Whitespace separated `src dst timestamp [weight]`; lines starting with
// '%' or '#' and blank lines are skipped.
EdgeList parse_edge_list(std::istream& in, const ParseOptions& opts = {});
EdgeList load_edge_list(const std::string& path, const ParseOptions& opts = {});

struct SliceConfig {
  std::optional<std::int64_t> origin;  // defaults to the earliest timestamp
  std::int64_t duration = 1;
  std::optional<int> count;  // defaults to covering the whole span
};

struct SliceResult {
  SnapshotSequence sequence;
  std::vector<std::size_t> events_per_snapshot;
  std::size_t dropped = 0;

  std::size_t retained() const;
};

// Event at ts lands in snapshot floor((ts - origin) / duration); intervals
// are half open. Events outside [origin, origin + count * duration) are
// dropped and counted.
SliceResult slice_snapshots(const EdgeList& edges, const SliceConfig& cfg);

}  // namespace tsam
