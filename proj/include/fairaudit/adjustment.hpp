#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/model_client.hpp"
#include "fairaudit/perturbation.hpp"
#include "fairaudit/prompting.hpp"
#include "fairaudit/rational.hpp"

namespace fairaudit {

/// Fraction of variant verdicts matching the original, as an exact rational
/// in {0, 1/N, ..., 1}. Throws DataError on an empty variant list.
Rational consistency_rate(Verdict original, std::span<const Verdict> variants);

/// Threshold rule: keep the original verdict when cr >= t (the boundary
/// keeps it), otherwise flip to the binary complement.
Verdict adjust(Verdict original, const Rational& cr, const Rational& t);

/// The full consistency audit of one (record, prompt) pair.
struct ConsistencyAudit {
  std::string record_id;
  std::string prompt_id;
  Verdict original;
  std::vector<Verdict> variants;
  Rational cr;
  Rational threshold;
  Verdict adjusted;
  bool flipped = false;
  // Denormalized so metrics can be recomputed from the audit trail alone.
  int label = 0;
  std::optional<int> group;

  nlohmann::ordered_json to_json() const;
  static ConsistencyAudit from_json(const nlohmann::json& j);
};

/// Runs the perturb -> classify -> consistency-rate -> adjust pipeline for
/// single records. The audit for a record is all-or-nothing: any classify
/// failure propagates and nothing is recorded.
class Auditor {
 public:
  Auditor(const SchemaConfig& schema, const PerturbationPlan& plan,
          std::vector<std::string> feature_order, ModelClient& client,
          Rational threshold);

  /// Issues 1 + N classify calls (original sentence, then each variant in
  /// plan order) under the same prompt.
  ConsistencyAudit audit_record(const Record& record,
                                const PromptSpec& prompt) const;

  const Rational& threshold() const { return threshold_; }

 private:
  const SchemaConfig& schema_;
  const PerturbationPlan& plan_;
  std::vector<std::string> feature_order_;
  ModelClient& client_;
  Rational threshold_;
};

}  // namespace fairaudit
