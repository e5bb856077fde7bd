#pragma once

#include <string>
#include <vector>

#include "tsam/motif.hpp"

namespace tsam {

// Largest node count accepted; the decoder output layer holds h_dec * n^2
// weights.
inline constexpr int kMaxNodes = 1200;

struct ModelConfig {
  int n = 0;            // nodes
  int f_in = 0;         // input feature width (n for one-hot features)
  int f_struct = 32;    // structural feature width per node
  int h_rnn = 1024;     // GRU hidden width
  int f_attn = 256;     // temporal attention width per head
  int k_node = 4;       // node-level attention heads
  int k_time = 8;       // time-level attention heads
  int h_dec = 128;      // decoder hidden width
  int window = 8;       // input snapshots per sample
  std::vector<TransformKind> transforms{kAllTransforms.begin(), kAllTransforms.end()};
  double lr = 0.001;
  double l2 = 0.0;
  double penalty_beta = 5.0;
  // Initial decoder output bias. Output units whose pre-activation starts
  // negative receive no gradient through the final ReLU.
  double output_bias = 0.5;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace tsam
