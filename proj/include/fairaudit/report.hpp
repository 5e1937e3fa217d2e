#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/adjustment.hpp"
#include "fairaudit/metrics.hpp"

namespace fairaudit {

inline constexpr const char* kToolVersion = "fairaudit 0.1.0";

/// Everything the report derives for one prompt design.
struct PromptResult {
  std::string prompt_id;
  std::int64_t audited = 0;
  std::int64_t unparseable = 0;
  std::int64_t flips = 0;
  GroupMetrics g0_original, g1_original, g0_adjusted, g1_adjusted;
  FairnessGaps original, adjusted;
  OverallPerformance overall_original, overall_adjusted;
};

/// Unweighted mean across prompts; undefined entries are skipped and counted.
struct GapAverage {
  std::optional<Rational> value;
  int skipped = 0;
};

struct AverageGaps {
  GapAverage d_tpr, d_fpr, d_precision, d_recall, d_accuracy, d_sp;
};

/// Sections of the report that cannot be recomputed from audit lines alone;
/// persisted as meta.json next to audits.jsonl so that reports regenerate
/// byte-identically from the audit trail.
struct TrailMeta {
  nlohmann::ordered_json config;
  nlohmann::ordered_json dataset;
  std::int64_t out_of_scope_group = 0;
  std::int64_t plan_not_covered = 0;
  std::vector<std::string> prompt_order;
  std::map<std::string, std::int64_t> unparseable;  // per prompt id
  Rational threshold;

  nlohmann::ordered_json to_json() const;
  static TrailMeta from_json(const nlohmann::ordered_json& j);
};

struct FairnessReport {
  std::string tool = kToolVersion;
  TrailMeta meta;
  std::vector<PromptResult> prompts;
  AverageGaps average_original;
  AverageGaps average_adjusted;
  GapAverage avg_accuracy_original, avg_precision_original;
  GapAverage avg_accuracy_adjusted, avg_precision_adjusted;

  nlohmann::ordered_json to_json() const;
  /// Table-shaped CSV: one row per metric/threshold variant, one column per
  /// prompt, values rendered to 2 decimal places ("undef" when undefined).
  std::string to_csv() const;
};

/// Aggregates one prompt's audits. When override_threshold is set the
/// adjusted verdicts are re-derived at that threshold (threshold sweeps cost
/// zero classify calls).
PromptResult aggregate_prompt(
    const std::string& prompt_id, std::span<const ConsistencyAudit> audits,
    std::int64_t unparseable,
    const std::optional<Rational>& override_threshold = std::nullopt);

/// Builds the full report from an audit trail (meta + audit lines).
FairnessReport report_from_audits(const TrailMeta& meta,
                                  const std::vector<ConsistencyAudit>& audits);

// --- audit trail I/O ---

void write_audit_trail(const std::filesystem::path& dir, const TrailMeta& meta,
                       const std::vector<ConsistencyAudit>& audits);
std::vector<ConsistencyAudit> read_audits(const std::filesystem::path& dir);
TrailMeta read_trail_meta(const std::filesystem::path& dir);

// --- emission ---

enum class ReportFormat { Json, Table, Chart };

/// Parses "json,table,chart" (the spec's `--formats` flag).
std::set<ReportFormat> parse_formats(const std::string& list);

/// Writes report.json / report.csv / charts/*.svg atomically (write-temp,
/// rename). Throws DataError on an empty prompt result set before touching
/// any file; returns the written paths.
std::vector<std::filesystem::path> emit_report(
    const FairnessReport& report, const std::set<ReportFormat>& formats,
    const std::filesystem::path& out_dir);

/// JSON shape used for every rational in reports: {num, den, text} or null.
nlohmann::ordered_json rational_json(const std::optional<Rational>& r);

/// Atomic file write used by every report artifact.
void write_atomic(const std::filesystem::path& path,
                  const std::string& content);

}  // namespace fairaudit
