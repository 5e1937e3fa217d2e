#include <doctest.h>

#include <random>

#include "fairaudit/errors.hpp"
#include "fairaudit/metrics.hpp"

using namespace fairaudit;

namespace {

std::vector<Verdict> verdicts(const std::vector<int>& values) {
  std::vector<Verdict> out;
  for (int v : values) out.emplace_back(v);
  return out;
}

// Independent straight-line tally used as the oracle: plain counters, no
// shared code with the metrics module beyond the Rational value type.
struct Tally {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
};

Tally tally_group(const std::vector<int>& v, const std::vector<int>& l,
                  const std::vector<int>& g, int group) {
  Tally t;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (g[i] != group) continue;
    if (v[i] == 1 && l[i] == 1) t.tp++;
    if (v[i] == 1 && l[i] == 0) t.fp++;
    if (v[i] == 0 && l[i] == 0) t.tn++;
    if (v[i] == 0 && l[i] == 1) t.fn++;
  }
  return t;
}

void check_rate(const std::optional<Rational>& got, long long num,
                long long den) {
  if (den == 0) {
    CHECK_FALSE(got.has_value());
  } else {
    REQUIRE(got.has_value());
    CHECK(*got == Rational(num, den));
  }
}

void check_against_tally(const GroupMetrics& m, const Tally& t) {
  CHECK(m.tp == t.tp);
  CHECK(m.fp == t.fp);
  CHECK(m.tn == t.tn);
  CHECK(m.fn == t.fn);
  check_rate(m.tpr, t.tp, t.tp + t.fn);
  check_rate(m.fpr, t.fp, t.fp + t.tn);
  check_rate(m.precision, t.tp, t.tp + t.fp);
  check_rate(m.recall, t.tp, t.tp + t.fn);
  check_rate(m.accuracy, t.tp + t.tn, t.tp + t.fp + t.tn + t.fn);
  check_rate(m.sp, t.tp + t.fp, t.tp + t.fp + t.tn + t.fn);
}

}  // namespace

TEST_CASE("perfect prediction has tpr 1, fpr 0, accuracy 1 in both groups") {
  const std::vector<int> labels = {1, 0, 1, 0};
  const std::vector<int> groups = {0, 0, 1, 1};
  const auto [g0, g1] = group_metrics(verdicts(labels), labels, groups);
  for (const auto* m : {&g0, &g1}) {
    CHECK(*m->tpr == Rational(1, 1));
    CHECK(*m->fpr == Rational(0, 1));
    CHECK(*m->accuracy == Rational(1, 1));
  }
  const FairnessGaps gaps = fairness_gaps(g0, g1);
  CHECK(*gaps.d_tpr == Rational(0, 1));
  CHECK(*gaps.d_accuracy == Rational(0, 1));
}

TEST_CASE("hand-countable single-group case") {
  const auto [g0, g1] = group_metrics(verdicts({1, 0}), std::vector<int>{1, 1},
                                      std::vector<int>{1, 1});
  CHECK(g1.tp == 1);
  CHECK(g1.fn == 1);
  CHECK(*g1.tpr == Rational(1, 2));
  // Group 0 is empty: every rate undefined, never zero.
  CHECK(g0.total() == 0);
  CHECK_FALSE(g0.tpr.has_value());
  CHECK_FALSE(g0.accuracy.has_value());
  const FairnessGaps gaps = fairness_gaps(g0, g1);
  CHECK_FALSE(gaps.d_tpr.has_value());  // undefined propagates
}

TEST_CASE("recall mirrors tpr in the report rows") {
  const auto [g0, g1] =
      group_metrics(verdicts({1, 0, 1, 1}), std::vector<int>{1, 1, 0, 1},
                    std::vector<int>{0, 0, 0, 0});
  REQUIRE(g0.recall.has_value());
  CHECK(*g0.recall == *g0.tpr);
}

TEST_CASE("length mismatch and bad group ids are data errors") {
  CHECK_THROWS_AS(group_metrics(verdicts({1}), std::vector<int>{1, 0},
                                std::vector<int>{0, 0}),
                  DataError);
  CHECK_THROWS_AS(group_metrics(verdicts({1}), std::vector<int>{1},
                                std::vector<int>{2}),
                  DataError);
  CHECK_THROWS_AS(overall_performance(verdicts({1}), std::vector<int>{}),
                  DataError);
}

TEST_CASE("seeded random datasets match the straight-line tally oracle") {
  std::mt19937 rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 500;
    std::vector<int> v(n), l(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = int(rng() % 2);
      l[i] = int(rng() % 2);
      g[i] = int(rng() % 2);
    }
    const auto [g0, g1] = group_metrics(verdicts(v), l, g);
    check_against_tally(g0, tally_group(v, l, g, 0));
    check_against_tally(g1, tally_group(v, l, g, 1));

    // Partition property: group totals sum to the dataset size.
    CHECK(g0.total() + g1.total() == static_cast<long long>(n));

    // Overall against the same oracle with groups collapsed.
    const Tally all = tally_group(v, l, std::vector<int>(n, 0), 0);
    const OverallPerformance perf = overall_performance(verdicts(v), l);
    check_rate(perf.accuracy, all.tp + all.tn, static_cast<long long>(n));
    check_rate(perf.precision, all.tp, all.tp + all.fp);
  }
}

TEST_CASE("gap arithmetic") {
  GroupMetrics a, b;
  a.sp = Rational(3, 10);
  b.sp = Rational(3, 10);
  a.tpr = Rational(7, 10);
  b.tpr = Rational(1, 2);
  CHECK(*fairness_gaps(a, b).d_sp == Rational(0, 1));
  CHECK(*fairness_gaps(a, b).d_tpr == Rational(1, 5));
  CHECK(fairness_gaps(a, b).d_tpr->to_decimal(2) == "0.20");
}

TEST_CASE("fairness gaps are symmetric in the groups") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 40;
    std::vector<int> v(n), l(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = int(rng() % 2);
      l[i] = int(rng() % 2);
      g[i] = int(rng() % 2);
    }
    const auto [g0, g1] = group_metrics(verdicts(v), l, g);
    const FairnessGaps ab = fairness_gaps(g0, g1);
    const FairnessGaps ba = fairness_gaps(g1, g0);
    CHECK(ab.d_tpr == ba.d_tpr);
    CHECK(ab.d_fpr == ba.d_fpr);
    CHECK(ab.d_precision == ba.d_precision);
    CHECK(ab.d_accuracy == ba.d_accuracy);
    CHECK(ab.d_sp == ba.d_sp);
    // Defined gaps stay inside [0, 1].
    for (const auto& d : {ab.d_tpr, ab.d_fpr, ab.d_precision, ab.d_recall,
                          ab.d_accuracy, ab.d_sp}) {
      if (d) {
        CHECK(*d >= Rational(0, 1));
        CHECK(*d <= Rational(1, 1));
      }
    }
  }
}

TEST_CASE("overall performance identity cases") {
  const std::vector<int> labels = {1, 0, 1, 0};
  CHECK(*overall_performance(verdicts(labels), labels).accuracy ==
        Rational(1, 1));
  const OverallPerformance all_ones =
      overall_performance(verdicts({1, 1, 1, 1}), labels);
  CHECK(*all_ones.precision == Rational(1, 2));
  CHECK(*all_ones.accuracy == Rational(1, 2));
  // No predicted positives: precision undefined.
  const OverallPerformance all_zeros =
      overall_performance(verdicts({0, 0, 0, 0}), labels);
  CHECK_FALSE(all_zeros.precision.has_value());
  CHECK(*all_zeros.accuracy == Rational(1, 2));
}
