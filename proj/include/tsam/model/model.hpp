#pragma once

#include <span>
#include <vector>

#include "tsam/graph.hpp"
#include "tsam/model/layers.hpp"

namespace tsam {

using ScoreMatrix = MatrixD;

// One-hot node ids, n x n.
template <typename S>
Matrix<S> default_features(int n) {
  return Matrix<S>::Identity(n, n);
}

// Per-snapshot inputs that do not depend on parameters: the attention
// support and, per active transform, the normalized propagation applied to X.
template <typename S>
struct PreparedSnapshot {
  ad::Mask support;
  std::vector<Matrix<S>> propagated;
};

template <typename S>
PreparedSnapshot<S> prepare_snapshot(const DirectedSnapshot& a, const Matrix<S>& x,
                                     const std::vector<TransformKind>& transforms);

template <typename S>
struct ForwardTrace {
  ad::Var<S> scores;  // n x n
  ad::Var<S> z;       // T x (k_time * f_attn)
  std::vector<ad::Var<S>> fused;    // per input snapshot, 1 x (n * f_struct)
  std::vector<ad::Var<S>> hidden;   // per input snapshot, 1 x h_rnn
  std::vector<std::vector<Matrix<S>>> node_attention;  // [step][head]
  std::vector<Matrix<S>> time_attention;               // [head]
};

// Encoder over the window then decoder on the last temporal embedding.
template <typename S>
ForwardTrace<S> forward(ad::Tape<S>& tape, const BoundParams<S>& params, const Matrix<S>& x,
                        std::span<const PreparedSnapshot<S>* const> window, const ModelConfig& cfg);

// Checks the parameter shapes against cfg and x.
template <typename S>
void check_shapes(const ModelParams<S>& params, const ModelConfig& cfg, const Matrix<S>& x);

template <typename S>
Matrix<S> forward(const WindowSample& sample, const ModelParams<S>& params, const ModelConfig& cfg,
                  const Matrix<S>& x);

template <typename S>
Matrix<S> forward(const WindowSample& sample, const ModelParams<S>& params, const ModelConfig& cfg) {
  return forward(sample, params, cfg, default_features<S>(cfg.n));
}

}  // namespace tsam
