#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "fairaudit/model_client.hpp"
#include "fairaudit/rational.hpp"

namespace fairaudit {

/// Confusion counts and derived rates for one demographic group. A rate with
/// a zero denominator is undefined (nullopt), never silently 0.
struct GroupMetrics {
  int group = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
  std::optional<Rational> tpr;        // tp / (tp + fn)
  std::optional<Rational> fpr;        // fp / (fp + tn)
  std::optional<Rational> precision;  // tp / (tp + fp)
  std::optional<Rational> recall;     // = tpr, kept as its own row
  std::optional<Rational> accuracy;   // (tp + tn) / total
  std::optional<Rational> sp;         // (tp + fp) / total

  std::int64_t total() const { return tp + fp + tn + fn; }
};

/// Per-metric absolute gaps |m_0 - m_1|; undefined propagates.
struct FairnessGaps {
  std::optional<Rational> d_tpr;
  std::optional<Rational> d_fpr;
  std::optional<Rational> d_precision;
  std::optional<Rational> d_recall;
  std::optional<Rational> d_accuracy;
  std::optional<Rational> d_sp;
};

/// Ungrouped predictive performance.
struct OverallPerformance {
  std::optional<Rational> accuracy;
  std::optional<Rational> precision;
};

/// Partitions the confusion counts by group id (0/1) and derives all rates.
/// Throws DataError on length mismatch or a group id outside {0, 1}.
std::pair<GroupMetrics, GroupMetrics> group_metrics(
    std::span<const Verdict> verdicts, std::span<const int> labels,
    std::span<const int> groups);

FairnessGaps fairness_gaps(const GroupMetrics& g0, const GroupMetrics& g1);

OverallPerformance overall_performance(std::span<const Verdict> verdicts,
                                       std::span<const int> labels);

}  // namespace fairaudit
