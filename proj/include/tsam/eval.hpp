#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsam/graph.hpp"

namespace tsam {

using Pair = std::pair<int, int>;

struct AucMode {
  enum class Kind { exact, sampled } kind = Kind::exact;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static AucMode exact() { return {}; }
  static AucMode sampled(std::size_t n, std::uint64_t seed) { return {Kind::sampled, n, seed}; }
};

// Probability that a positive outscores a negative, ties counted half.
// Exact mode covers every positive/negative pair.
double auc(const std::vector<double>& pos, const std::vector<double>& neg, AucMode mode = AucMode::exact());

// Area under the precision-recall curve from a descending threshold sweep.
// Equal scores form one step. Segments are trapezoids in recall; the curve
// starts at (0, precision of the first step).
double prauc(const std::vector<double>& pos, const std::vector<double>& neg);

// Ordered off-diagonal pairs, partitioned by their state in a_t and a_next.
struct CandidateSplit {
  std::vector<Pair> persisted;
  std::vector<Pair> removed;
  std::vector<Pair> added;
  std::vector<Pair> never;
};

CandidateSplit split_candidates(const DirectedSnapshot& a_t, const DirectedSnapshot& a_next);

// Combines the baseline-adjusted PRAUC on changed links with AUC on
// previously existing links. `added_rate` is L_A / (L_A + L_R).
double gmauc_from_parts(double prauc_changed, double auc_existing, double added_rate);

struct GmaucParts {
  double prauc_changed = 0;
  double auc_existing = 0;
  double added_rate = 0;
  double value = 0;
};

// Throws UndefinedMetricError naming the empty set when there are no added,
// removed or persisted links.
GmaucParts gmauc_parts(const MatrixD& scores, const DirectedSnapshot& a_t, const DirectedSnapshot& a_next);
double gmauc(const MatrixD& scores, const DirectedSnapshot& a_t, const DirectedSnapshot& a_next);

std::vector<double> gather(const MatrixD& scores, const std::vector<Pair>& pairs);

struct SampleCounts {
  std::size_t positives = 0;  // links of a_next
  std::size_t negatives = 0;  // off-diagonal non-links of a_next
  std::size_t persisted = 0;
  std::size_t removed = 0;
  std::size_t added = 0;
  std::size_t never = 0;
};

struct EvalReport {
  int anchor_t = 0;
  double auc = 0;
  double prauc = 0;
  std::optional<double> gmauc;  // empty when undefined for this anchor
  std::string gmauc_note;       // why gmauc is missing
  SampleCounts counts;
  std::uint64_t seed = 0;
};

// Headline AUC/PRAUC rank links of a_next against its non-links.
EvalReport evaluate(const MatrixD& scores, const DirectedSnapshot& a_t, const DirectedSnapshot& a_next, int anchor_t,
                    std::uint64_t seed, AucMode mode = AucMode::exact());

std::string to_json(const EvalReport& report);

}  // namespace tsam
