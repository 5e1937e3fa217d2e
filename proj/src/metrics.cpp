#include "fairaudit/metrics.hpp"

#include <string>

#include "fairaudit/errors.hpp"

namespace fairaudit {

namespace {

std::optional<Rational> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return Rational(num, den);
}

void derive_rates(GroupMetrics& m) {
  m.tpr = ratio(m.tp, m.tp + m.fn);
  m.fpr = ratio(m.fp, m.fp + m.tn);
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = m.tpr;
  m.accuracy = ratio(m.tp + m.tn, m.total());
  m.sp = ratio(m.tp + m.fp, m.total());
}

std::optional<Rational> gap(const std::optional<Rational>& a,
                            const std::optional<Rational>& b) {
  if (!a || !b) return std::nullopt;
  return (*a - *b).abs();
}

void check_label(int label) {
  if (label != 0 && label != 1)
    throw DataError("label must be 0 or 1, got " + std::to_string(label));
}

}  // namespace

std::pair<GroupMetrics, GroupMetrics> group_metrics(
    std::span<const Verdict> verdicts, std::span<const int> labels,
    std::span<const int> groups) {
  if (verdicts.size() != labels.size() || labels.size() != groups.size())
    throw DataError("verdicts, labels and groups must have the same length");
  GroupMetrics g0;
  g0.group = 0;
  GroupMetrics g1;
  g1.group = 1;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    check_label(labels[i]);
    if (groups[i] != 0 && groups[i] != 1)
      throw DataError("group id must be 0 or 1, got " +
                      std::to_string(groups[i]));
    GroupMetrics& m = groups[i] == 0 ? g0 : g1;
    const int predicted = verdicts[i].value();
    const int actual = labels[i];
    if (predicted == 1 && actual == 1) ++m.tp;
    if (predicted == 1 && actual == 0) ++m.fp;
    if (predicted == 0 && actual == 0) ++m.tn;
    if (predicted == 0 && actual == 1) ++m.fn;
  }
  derive_rates(g0);
  derive_rates(g1);
  return {g0, g1};
}

FairnessGaps fairness_gaps(const GroupMetrics& g0, const GroupMetrics& g1) {
  FairnessGaps gaps;
  gaps.d_tpr = gap(g0.tpr, g1.tpr);
  gaps.d_fpr = gap(g0.fpr, g1.fpr);
  gaps.d_precision = gap(g0.precision, g1.precision);
  gaps.d_recall = gap(g0.recall, g1.recall);
  gaps.d_accuracy = gap(g0.accuracy, g1.accuracy);
  gaps.d_sp = gap(g0.sp, g1.sp);
  return gaps;
}

OverallPerformance overall_performance(std::span<const Verdict> verdicts,
                                       std::span<const int> labels) {
  if (verdicts.size() != labels.size())
    throw DataError("verdicts and labels must have the same length");
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    check_label(labels[i]);
    const int predicted = verdicts[i].value();
    const int actual = labels[i];
    if (predicted == 1 && actual == 1) ++tp;
    if (predicted == 1 && actual == 0) ++fp;
    if (predicted == 0 && actual == 0) ++tn;
    if (predicted == 0 && actual == 1) ++fn;
  }
  OverallPerformance perf;
  perf.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  perf.precision = ratio(tp, tp + fp);
  return perf;
}

}  // namespace fairaudit
