#include "tsam/graph.hpp"

#include <string>

namespace tsam {

DirectedSnapshot::DirectedSnapshot(int n, int time_index)
    : n_(n), time_index_(time_index), adj_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0) {
  if (n < 0) throw ParameterError("snapshot node count must be nonnegative, got " + std::to_string(n));
}

std::size_t DirectedSnapshot::link_count() const {
  std::size_t c = 0;
  for (auto v : adj_) c += v;
  return c;
}

std::vector<std::pair<int, int>> DirectedSnapshot::links() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (has(i, j)) out.emplace_back(i, j);
  return out;
}

SnapshotSequence::SnapshotSequence(int n, std::vector<DirectedSnapshot> snapshots)
    : n_(n), snapshots_(std::move(snapshots)) {
  for (std::size_t t = 0; t < snapshots_.size(); ++t) {
    if (snapshots_[t].n() != n_)
      throw DimensionError("snapshot " + std::to_string(t) + " has " + std::to_string(snapshots_[t].n()) +
                           " nodes, sequence has " + std::to_string(n_));
    snapshots_[t].set_time_index(static_cast<int>(t));
  }
}

DirectedSnapshot build_adjacency(const std::vector<std::pair<int, int>>& edges, int n, int time_index) {
  DirectedSnapshot snap(n, time_index);
  for (const auto& [src, dst] : edges) {
    if (src < 0 || src >= n || dst < 0 || dst >= n)
      throw IndexError("edge (" + std::to_string(src) + ", " + std::to_string(dst) + ") outside node range [0, " +
                       std::to_string(n) + ")");
    snap.set(src, dst);
  }
  return snap;
}

std::vector<WindowSample> make_windows(const SnapshotSequence& seq, int window) {
  if (window <= 0) throw ParameterError("window size must be positive, got " + std::to_string(window));
  std::vector<WindowSample> out;
  const int len = static_cast<int>(seq.size());
  for (int k = 0; k + window < len; ++k) out.push_back(window_ending_at(seq, window, k + window - 1));
  return out;
}

WindowSample window_ending_at(const SnapshotSequence& seq, int window, int anchor_t) {
  if (window <= 0) throw ParameterError("window size must be positive, got " + std::to_string(window));
  const int first = anchor_t - window + 1;
  if (first < 0 || anchor_t + 1 >= static_cast<int>(seq.size()))
    throw ProtocolError("no window of size " + std::to_string(window) + " ending at " + std::to_string(anchor_t) +
                        " in a sequence of " + std::to_string(seq.size()) + " snapshots");
  WindowSample s;
  s.inputs.assign(seq.snapshots().begin() + first, seq.snapshots().begin() + anchor_t + 1);
  s.target = seq[static_cast<std::size_t>(anchor_t + 1)];
  s.anchor_t = anchor_t;
  return s;
}

double average_degree(int node_count, long long link_count) {
  if (node_count <= 0) throw DegenerateInputError("average degree of a graph with no nodes");
  return 2.0 * static_cast<double>(link_count) / static_cast<double>(node_count);
}

NetworkStats network_stats(const SnapshotSequence& seq, long long raw_link_count) {
  if (raw_link_count < 0) throw ParameterError("raw link count must be nonnegative");
  NetworkStats s;
  s.node_count = seq.n();
  s.link_count = raw_link_count;
  s.average_degree = average_degree(seq.n(), raw_link_count);
  s.snapshot_count = static_cast<int>(seq.size());
  return s;
}

}  // namespace tsam
