#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tsam/graph.hpp"

namespace tsam {

// Directed 2-hop motif transforms of an adjacency matrix A.
//   M1 = A A      counts u -> t -> v
//   M2 = A^T A    counts t -> u, t -> v   (common source)
//   M3 = A A^T    counts u -> t, v -> t   (common target)
//   M4 = A^T A^T  counts v -> t -> u
enum class TransformKind { M1, M2, M3, M4 };

inline constexpr std::array<TransformKind, 4> kAllTransforms = {TransformKind::M1, TransformKind::M2,
                                                                 TransformKind::M3, TransformKind::M4};

std::string to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view name);

using CountMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TransformedMatrix {
  TransformKind kind = TransformKind::M1;
  CountMatrix values;
};

CountMatrix adjacency_counts(const DirectedSnapshot& a);

TransformedMatrix transform(const DirectedSnapshot& a, TransformKind kind);

// Counts the intermediate nodes t completing the kind's pattern between u
// and v by direct enumeration. Independent of transform().
int motif_count_oracle(const DirectedSnapshot& a, TransformKind kind, int u, int v);

}  // namespace tsam
