#pragma once

#include <string>

#include "tsam/model/params.hpp"

namespace tsam {

// Binary container:
//   "TSAMCKPT" | u32 version | u32 scalar bytes | u64 len | config JSON
//   u64 tensor count | per tensor: u32 name len | name | u64 rows | u64 cols | raw data
// Little-endian, row-major data, written and read in for_each_param order.
template <typename S>
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams<S>& params);

template <typename S>
struct Checkpoint {
  ModelConfig config;
  ModelParams<S> params;
};

// Throws when the file's scalar width differs from S.
template <typename S>
Checkpoint<S> load_checkpoint(const std::string& path);

}  // namespace tsam
