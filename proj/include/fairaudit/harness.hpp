#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/model_client.hpp"
#include "fairaudit/perturbation.hpp"
#include "fairaudit/prompting.hpp"
#include "fairaudit/report.hpp"

namespace fairaudit {

/// Everything one experiment run needs. Defaults follow the paper setup:
/// t = 0.9 and the three-binary-axis plan (N = 8).
struct ExperimentConfig {
  std::filesystem::path data_path;  // "-" reads standard input
  SchemaConfig schema = SchemaConfig::compas_default();
  PromptSet prompt_set = PromptSet::paper_default();
  PerturbationPlan plan = PerturbationPlan::paper_default();
  BackendConfig backend;
  std::optional<std::filesystem::path> cache_path;
  Rational threshold = Rational(9, 10);
  std::filesystem::path out_dir;
  int jobs = 1;
  bool strict = false;
  std::uint64_t seed = 0;
  /// Feature summarized by the group-balance check; skipped when absent.
  std::string balance_feature = "decile_score";

  void validate() const;
};

struct ExperimentResult {
  FairnessReport report;
  std::vector<ConsistencyAudit> audits;
  std::int64_t network_requests = 0;
  std::vector<std::filesystem::path> written;
};

/// Runs prompts x records through audit_record, persists the audit trail,
/// and emits the report. Backend failures abort with the partial audit trail
/// preserved; re-running against an intact cache issues no new requests.
ExperimentResult run_experiment(
    const ExperimentConfig& config,
    const std::set<ReportFormat>& formats = {ReportFormat::Json,
                                             ReportFormat::Table});

/// Per-threshold summary over an existing audit trail (Fig. 5 analog):
/// adjusted verdicts re-derived at each t, gaps averaged across prompts.
/// Costs zero classify calls.
struct ThresholdSummary {
  Rational threshold;
  AverageGaps adjusted;
  GapAverage avg_accuracy;
  GapAverage avg_precision;
  std::int64_t flips = 0;
};

std::vector<ThresholdSummary> sweep_threshold(
    const TrailMeta& meta, const std::vector<ConsistencyAudit>& audits,
    const std::vector<Rational>& thresholds);

/// Writes sweep_t.json and sweep_t.csv.
std::vector<std::filesystem::path> emit_threshold_sweep(
    const std::vector<ThresholdSummary>& sweep,
    const std::filesystem::path& out_dir);

/// Full run per plan at the config's threshold, tabulating gaps vs N
/// (Fig. 4 analog). Plans share the experiment cache.
struct PlanSummary {
  std::int64_t n = 0;
  AverageGaps original;
  AverageGaps adjusted;
  std::int64_t flips = 0;
  std::filesystem::path out_dir;
};

std::vector<PlanSummary> sweep_perturbations(
    const ExperimentConfig& base, const std::vector<PerturbationPlan>& plans);

std::vector<std::filesystem::path> emit_perturbation_sweep(
    const std::vector<PlanSummary>& sweep,
    const std::filesystem::path& out_dir);

/// Parses "0.5,0.75,0.9" into exact rationals.
std::vector<Rational> parse_threshold_list(const std::string& list);

}  // namespace fairaudit
