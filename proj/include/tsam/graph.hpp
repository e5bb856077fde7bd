#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tsam/numerics/tensor.hpp"

namespace tsam {

// One directed, unweighted snapshot stored as a dense byte matrix.
// adj(i, j) == 1 iff the link i -> j exists.
class DirectedSnapshot {
 public:
  DirectedSnapshot() = default;
  DirectedSnapshot(int n, int time_index);

  int n() const { return n_; }
  int time_index() const { return time_index_; }
  void set_time_index(int t) { time_index_ = t; }

  bool has(int i, int j) const { return adj_[index(i, j)] != 0; }
  void set(int i, int j, bool on = true) { adj_[index(i, j)] = on ? 1 : 0; }

  std::size_t link_count() const;
  std::vector<std::pair<int, int>> links() const;

  template <typename S>
  Matrix<S> to_matrix() const {
    Matrix<S> m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = has(i, j) ? S(1) : S(0);
    return m;
  }

  friend bool operator==(const DirectedSnapshot& a, const DirectedSnapshot& b) {
    return a.n_ == b.n_ && a.adj_ == b.adj_;
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }

  int n_ = 0;
  int time_index_ = 0;
  std::vector<std::uint8_t> adj_;
};

// Snapshots over one shared node set, time_index consecutive from 0.
class SnapshotSequence {
 public:
  SnapshotSequence() = default;
  SnapshotSequence(int n, std::vector<DirectedSnapshot> snapshots);

  int n() const { return n_; }
  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  const DirectedSnapshot& operator[](std::size_t t) const { return snapshots_[t]; }
  const std::vector<DirectedSnapshot>& snapshots() const { return snapshots_; }

 private:
  int n_ = 0;
  std::vector<DirectedSnapshot> snapshots_;
};

// T consecutive inputs followed by the snapshot to predict. anchor_t is the
// time index of the last input.
struct WindowSample {
  std::vector<DirectedSnapshot> inputs;
  DirectedSnapshot target;
  int anchor_t = 0;

  int window() const { return static_cast<int>(inputs.size()); }
};

struct NetworkStats {
  int node_count = 0;
  long long link_count = 0;
  double average_degree = 0;
  int snapshot_count = 0;
};

// Throws IndexError on a node id outside [0, n). Duplicates collapse.
DirectedSnapshot build_adjacency(const std::vector<std::pair<int, int>>& edges, int n,
                                 int time_index = 0);

// Sample k has inputs [k, k + window - 1] and target k + window.
std::vector<WindowSample> make_windows(const SnapshotSequence& seq, int window);

// The window whose last input is `anchor_t`, targeting anchor_t + 1.
WindowSample window_ending_at(const SnapshotSequence& seq, int window, int anchor_t);

double average_degree(int node_count, long long link_count);

// link_count is the raw number of timestamped events, not distinct links.
NetworkStats network_stats(const SnapshotSequence& seq, long long raw_link_count);

}  // namespace tsam
