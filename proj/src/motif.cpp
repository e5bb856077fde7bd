#include "tsam/motif.hpp"

namespace tsam {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::M1: return "M1";
    case TransformKind::M2: return "M2";
    case TransformKind::M3: return "M3";
    case TransformKind::M4: return "M4";
  }
  return "?";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (auto k : kAllTransforms)
    if (name == to_string(k)) return k;
  throw ParameterError("unknown transform '" + std::string(name) + "', expected one of M1, M2, M3, M4");
}

CountMatrix adjacency_counts(const DirectedSnapshot& a) {
  CountMatrix m(a.n(), a.n());
  for (int i = 0; i < a.n(); ++i)
    for (int j = 0; j < a.n(); ++j) m(i, j) = a.has(i, j) ? 1 : 0;
  return m;
}

TransformedMatrix transform(const DirectedSnapshot& a, TransformKind kind) {
  const CountMatrix m = adjacency_counts(a);
  TransformedMatrix out{kind, {}};
  switch (kind) {
    case TransformKind::M1: out.values = m * m; break;
    case TransformKind::M2: out.values = m.transpose() * m; break;
    case TransformKind::M3: out.values = m * m.transpose(); break;
    case TransformKind::M4: out.values = m.transpose() * m.transpose(); break;
  }
  return out;
}

int motif_count_oracle(const DirectedSnapshot& a, TransformKind kind, int u, int v) {
  if (u < 0 || u >= a.n() || v < 0 || v >= a.n())
    throw IndexError("node pair (" + std::to_string(u) + ", " + std::to_string(v) + ") outside [0, " +
                     std::to_string(a.n()) + ")");
  int count = 0;
  for (int t = 0; t < a.n(); ++t) {
    bool hit = false;
    switch (kind) {
      case TransformKind::M1: hit = a.has(u, t) && a.has(t, v); break;
      case TransformKind::M2: hit = a.has(t, u) && a.has(t, v); break;
      case TransformKind::M3: hit = a.has(u, t) && a.has(v, t); break;
      case TransformKind::M4: hit = a.has(t, u) && a.has(v, t); break;
    }
    if (hit) ++count;
  }
  return count;
}

}  // namespace tsam
