#include "tsam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

namespace tsam {

namespace {

void require_nonempty(const std::vector<double>& v, const char* metric, const char* which) {
  if (v.empty()) throw UndefinedMetricError(std::string(metric) + ": no " + which + " scores");
}

void require_finite(const std::vector<double>& v, const char* metric) {
  for (double s : v)
    if (!std::isfinite(s)) throw DegenerateInputError(std::string(metric) + ": non-finite score");
}

}  // namespace

double auc(const std::vector<double>& pos, const std::vector<double>& neg, AucMode mode) {
  require_nonempty(pos, "auc", "positive");
  require_nonempty(neg, "auc", "negative");
  require_finite(pos, "auc");
  require_finite(neg, "auc");

  if (mode.kind == AucMode::Kind::sampled) {
    if (mode.samples == 0) throw ParameterError("sampled auc needs at least one sample");
    std::mt19937_64 rng(mode.seed);
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
    std::uint64_t doubled = 0;
    for (std::size_t k = 0; k < mode.samples; ++k) {
      const double p = pos[pick_pos(rng)];
      const double q = neg[pick_neg(rng)];
      doubled += p > q ? 2 : (p == q ? 1 : 0);
    }
    return static_cast<double>(doubled) / (2.0 * static_cast<double>(mode.samples));
  }

  std::vector<double> sorted_neg = neg;
  std::sort(sorted_neg.begin(), sorted_neg.end());
  std::uint64_t doubled = 0;  // 2 * wins + ties, exact in integers
  for (double p : pos) {
    auto [lo, hi] = std::equal_range(sorted_neg.begin(), sorted_neg.end(), p);
    doubled += 2 * static_cast<std::uint64_t>(lo - sorted_neg.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(doubled) /
         (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double prauc(const std::vector<double>& pos, const std::vector<double>& neg) {
  require_nonempty(pos, "prauc", "positive");
  require_finite(pos, "prauc");
  require_finite(neg, "prauc");

  std::vector<std::pair<double, bool>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.emplace_back(s, true);
  for (double s : neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const double total_pos = static_cast<double>(pos.size());
  double tp = 0, fp = 0;
  double prev_recall = 0, prev_precision = -1;
  double area = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    for (; j < all.size() && all[j].first == all[i].first; ++j) (all[j].second ? tp : fp) += 1;
    i = j;
    const double recall = tp / total_pos;
    const double precision = tp / (tp + fp);
    if (prev_precision < 0) prev_precision = precision;
    area += (recall - prev_recall) * (precision + prev_precision) / 2;
    prev_recall = recall;
    prev_precision = precision;
  }
  return std::clamp(area, 0.0, 1.0);
}

CandidateSplit split_candidates(const DirectedSnapshot& a_t, const DirectedSnapshot& a_next) {
  if (a_t.n() != a_next.n())
    throw DimensionError("split_candidates: snapshots have " + std::to_string(a_t.n()) + " and " +
                         std::to_string(a_next.n()) + " nodes");
  CandidateSplit split;
  for (int i = 0; i < a_t.n(); ++i) {
    for (int j = 0; j < a_t.n(); ++j) {
      if (i == j) continue;
      const bool before = a_t.has(i, j);
      const bool after = a_next.has(i, j);
      auto& bucket = before ? (after ? split.persisted : split.removed) : (after ? split.added : split.never);
      bucket.emplace_back(i, j);
    }
  }
  return split;
}

double gmauc_from_parts(double prauc_changed, double auc_existing, double added_rate) {
  if (!(added_rate > 0 && added_rate < 1))
    throw UndefinedMetricError("gmauc: added-link rate must lie strictly between 0 and 1");
  const double pr_term = std::max(0.0, (prauc_changed - added_rate) / (1 - added_rate));
  const double auc_term = std::max(0.0, 2 * (auc_existing - 0.5));
  return std::sqrt(pr_term * auc_term);
}

std::vector<double> gather(const MatrixD& scores, const std::vector<Pair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) out.push_back(scores(i, j));
  return out;
}

GmaucParts gmauc_parts(const MatrixD& scores, const DirectedSnapshot& a_t, const DirectedSnapshot& a_next) {
  if (scores.rows() != a_t.n() || scores.cols() != a_t.n())
    throw DimensionError("gmauc: scores " + shape_str(scores) + " for " + std::to_string(a_t.n()) + " nodes");
  const auto split = split_candidates(a_t, a_next);
  if (split.added.empty()) throw UndefinedMetricError("gmauc: no added links");
  if (split.removed.empty()) throw UndefinedMetricError("gmauc: no removed links");
  if (split.persisted.empty()) throw UndefinedMetricError("gmauc: no persisted links");

  const auto removed = gather(scores, split.removed);
  GmaucParts parts;
  parts.prauc_changed = prauc(gather(scores, split.added), removed);
  parts.auc_existing = auc(gather(scores, split.persisted), removed);
  const double la = static_cast<double>(split.added.size());
  parts.added_rate = la / (la + static_cast<double>(split.removed.size()));
  parts.value = gmauc_from_parts(parts.prauc_changed, parts.auc_existing, parts.added_rate);
  return parts;
}

double gmauc(const MatrixD& scores, const DirectedSnapshot& a_t, const DirectedSnapshot& a_next) {
  return gmauc_parts(scores, a_t, a_next).value;
}

EvalReport evaluate(const MatrixD& scores, const DirectedSnapshot& a_t, const DirectedSnapshot& a_next, int anchor_t,
                    std::uint64_t seed, AucMode mode) {
  if (scores.rows() != a_next.n() || scores.cols() != a_next.n())
    throw DimensionError("evaluate: scores " + shape_str(scores) + " for " + std::to_string(a_next.n()) + " nodes");
  const auto split = split_candidates(a_t, a_next);

  std::vector<double> pos, neg;
  for (int i = 0; i < a_next.n(); ++i)
    for (int j = 0; j < a_next.n(); ++j)
      if (i != j) (a_next.has(i, j) ? pos : neg).push_back(scores(i, j));

  EvalReport r;
  r.anchor_t = anchor_t;
  r.seed = seed;
  r.counts = {pos.size(), neg.size(), split.persisted.size(), split.removed.size(), split.added.size(),
              split.never.size()};
  r.auc = auc(pos, neg, mode);
  r.prauc = prauc(pos, neg);
  try {
    r.gmauc = gmauc(scores, a_t, a_next);
  } catch (const UndefinedMetricError& e) {
    r.gmauc_note = e.what();
  }
  return r;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["anchor_t"] = report.anchor_t;
  j["seed"] = report.seed;
  j["auc"] = report.auc;
  j["prauc"] = report.prauc;
  if (report.gmauc) {
    j["gmauc"] = *report.gmauc;
  } else {
    j["gmauc"] = nullptr;
    j["gmauc_note"] = report.gmauc_note;
  }
  const auto& c = report.counts;
  j["sample_counts"] = {{"positives", c.positives}, {"negatives", c.negatives}, {"persisted", c.persisted},
                        {"removed", c.removed},     {"added", c.added},         {"never", c.never}};
  return j.dump(2);
}

}  // namespace tsam
