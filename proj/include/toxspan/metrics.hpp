#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"

// Official evaluation: per-comment F1 between predicted and gold
// character-offset sets, averaged (unweighted) over the corpus. The
// empty-set conventions follow the task scorer: both empty scores 1,
// exactly one empty scores 0.

namespace toxspan {

/// Dice form 2|g n p| / (|g| + |p|), which equals 2PR/(P+R) on non-empty
/// sets.
inline double comment_f1(const OffsetSet& gold, const OffsetSet& pred) {
  if (gold.empty() && pred.empty()) return 1.0;
  if (gold.empty() || pred.empty()) return 0.0;
  const auto overlap = static_cast<double>(intersection_size(gold, pred));
  return 2.0 * overlap / (static_cast<double>(gold.size()) + static_cast<double>(pred.size()));
}

/// Independent oracle for comment_f1: materializes membership per
/// character index and goes through precision/recall explicitly. Kept
/// deliberately separate from comment_f1's set arithmetic.
inline double brute_force_f1(const OffsetSet& gold, const OffsetSet& pred) {
  if (gold.empty() && pred.empty()) return 1.0;
  if (gold.empty() || pred.empty()) return 0.0;
  const int32_t limit =
      std::max(gold.values().back(), pred.values().back()) + 1;
  int64_t tp = 0, fp = 0, fn = 0;
  for (int32_t o = 0; o < limit; ++o) {
    const bool g = gold.contains(o);
    const bool p = pred.contains(o);
    if (g && p) ++tp;
    if (!g && p) ++fp;
    if (g && !p) ++fn;
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (precision == 0.0 && recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

struct EvalResult {
  std::vector<double> per_comment_f1;
  double mean_f1 = 0.0;
  int64_t empty_gold_count = 0;
  int64_t empty_pred_count = 0;
};

inline EvalResult evaluate_corpus(std::span<const OffsetSet> golds,
                                  std::span<const OffsetSet> preds) {
  if (golds.size() != preds.size()) {
    throw Error("gold/prediction length mismatch: " + std::to_string(golds.size()) + " vs " +
                std::to_string(preds.size()));
  }
  if (golds.empty()) throw Error("cannot evaluate an empty corpus");
  EvalResult result;
  result.per_comment_f1.reserve(golds.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const double f1 = comment_f1(golds[i], preds[i]);
    result.per_comment_f1.push_back(f1);
    sum += f1;
    if (golds[i].empty()) ++result.empty_gold_count;
    if (preds[i].empty()) ++result.empty_pred_count;
  }
  result.mean_f1 = sum / static_cast<double>(golds.size());
  return result;
}

}  // namespace toxspan
