#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

namespace fairaudit {

/// One perturbation axis: the feature to vary and its value domain.
struct Axis {
  std::string feature;
  std::vector<FeatureValue> values;
};

/// Defines the counterfactual variant set as the cartesian product of axis
/// domains. With include_identity on, the assignment equal to the record
/// itself is part of the set (N = product of domain sizes); otherwise it is
/// removed (N = product - 1).
struct PerturbationPlan {
  std::vector<Axis> axes;
  bool include_identity = true;
  /// Extra axes, in priority order, available to plan_for_n.
  std::vector<Axis> extra_axes;

  /// Declared N for this plan.
  std::int64_t variant_count() const;

  /// Domains must hold >= 2 distinct values, axis features must exist in the
  /// schema, and the plan must declare at least one variant.
  void validate(const SchemaConfig& schema) const;

  /// Default paper plan: sex, race, charge degree (binary each), identity on.
  static PerturbationPlan paper_default();
  static PerturbationPlan from_json(const nlohmann::json& j);
  static PerturbationPlan load(const std::string& path);
  nlohmann::ordered_json to_json() const;
};

/// Enumerates one variant per assignment in the cartesian product of axis
/// domains, in lexicographic order over axis value indices (first axis most
/// significant). Each variant differs from the record only on axis features;
/// its group id is re-derived from the (possibly flipped) sensitive value.
/// Throws PlanCoverageError when an axis domain does not contain the
/// record's current value, DataError when an axis feature is missing.
std::vector<Record> generate_variants(const Record& record,
                                      const PerturbationPlan& plan,
                                      const SchemaConfig& schema);

/// Extends the plan's axes with extra axes (in priority order) until the
/// declared N reaches requested_n exactly. Throws ConfigError when the
/// target is not achievable.
PerturbationPlan plan_for_n(const PerturbationPlan& base,
                            std::int64_t requested_n);

}  // namespace fairaudit
