#include "fairaudit/perturbation.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

Axis axis_from_json(const json& j) {
  Axis axis;
  axis.feature = j.at("feature").get<std::string>();
  for (const auto& vj : j.at("values")) {
    if (vj.is_string()) {
      axis.values.push_back(FeatureValue::text(vj.get<std::string>()));
    } else if (vj.is_number_integer()) {
      axis.values.push_back(FeatureValue::integer(vj.get<std::int64_t>()));
    } else {
      throw ConfigError("plan axis values must be strings or integers");
    }
  }
  return axis;
}

// Re-types axis values through the schema's feature spec so that domain
// membership is validated and equality against record values is exact.
Axis coerce_axis(const Axis& axis, const SchemaConfig& schema) {
  const FeatureSpec* spec = schema.find_feature(axis.feature);
  if (!spec)
    throw ConfigError("plan axis feature \"" + axis.feature +
                      "\" not in schema");
  Axis out;
  out.feature = axis.feature;
  for (const auto& v : axis.values) {
    try {
      out.values.push_back(spec->parse(v.render()));
    } catch (const DataError& e) {
      throw ConfigError("plan axis \"" + axis.feature + "\": " + e.what());
    }
  }
  return out;
}

void check_axis_domain(const Axis& axis) {
  std::vector<std::string> rendered;
  for (const auto& v : axis.values) rendered.push_back(v.render());
  std::sort(rendered.begin(), rendered.end());
  if (rendered.size() < 2 ||
      std::adjacent_find(rendered.begin(), rendered.end()) != rendered.end())
    throw ConfigError("plan axis \"" + axis.feature +
                      "\" needs at least 2 distinct values");
}

}  // namespace

std::int64_t PerturbationPlan::variant_count() const {
  std::int64_t product = 1;
  for (const auto& axis : axes)
    product *= static_cast<std::int64_t>(axis.values.size());
  return include_identity ? product : product - 1;
}

void PerturbationPlan::validate(const SchemaConfig& schema) const {
  for (const auto& axis : axes) {
    check_axis_domain(axis);
    coerce_axis(axis, schema);
  }
  for (const auto& axis : extra_axes) {
    check_axis_domain(axis);
    coerce_axis(axis, schema);
  }
  std::vector<std::string> names;
  for (const auto& axis : axes) names.push_back(axis.feature);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw ConfigError("plan lists the same axis feature twice");
  if (variant_count() < 1)
    throw ConfigError("plan declares no variants (empty axes need the "
                      "identity assignment)");
}

PerturbationPlan PerturbationPlan::paper_default() {
  PerturbationPlan plan;
  plan.axes = {
      {"sex", {FeatureValue::categorical("Male"),
               FeatureValue::categorical("Female")}},
      {"race", {FeatureValue::categorical("Caucasian"),
                FeatureValue::categorical("African-American")}},
      {"charge_degree",
       {FeatureValue::categorical("M"), FeatureValue::categorical("F")}},
  };
  plan.include_identity = true;
  plan.extra_axes = {
      {"juvenile_felony_count",
       {FeatureValue::integer(0), FeatureValue::integer(1)}},
      {"juvenile_misdemeanor_count",
       {FeatureValue::integer(0), FeatureValue::integer(1)}},
  };
  return plan;
}

PerturbationPlan PerturbationPlan::from_json(const json& j) {
  PerturbationPlan plan;
  plan.include_identity = j.value("include_identity", true);
  for (const auto& aj : j.at("axes")) plan.axes.push_back(axis_from_json(aj));
  if (j.contains("extra_axes")) {
    for (const auto& aj : j.at("extra_axes"))
      plan.extra_axes.push_back(axis_from_json(aj));
  }
  return plan;
}

PerturbationPlan PerturbationPlan::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("plan file " + path + ": " + e.what());
  }
  return from_json(j);
}

ordered_json PerturbationPlan::to_json() const {
  auto axis_json = [](const Axis& axis) {
    ordered_json aj;
    aj["feature"] = axis.feature;
    ordered_json values = ordered_json::array();
    for (const auto& v : axis.values) values.push_back(v.render());
    aj["values"] = std::move(values);
    return aj;
  };
  ordered_json j;
  ordered_json axes_json = ordered_json::array();
  for (const auto& a : axes) axes_json.push_back(axis_json(a));
  j["axes"] = std::move(axes_json);
  j["include_identity"] = include_identity;
  ordered_json extra = ordered_json::array();
  for (const auto& a : extra_axes) extra.push_back(axis_json(a));
  j["extra_axes"] = std::move(extra);
  return j;
}

std::vector<Record> generate_variants(const Record& record,
                                      const PerturbationPlan& plan,
                                      const SchemaConfig& schema) {
  plan.validate(schema);
  std::vector<Axis> axes;
  axes.reserve(plan.axes.size());
  for (const auto& axis : plan.axes) axes.push_back(coerce_axis(axis, schema));

  // Locate the identity assignment; every axis domain must cover the
  // record's current value or the declared-N invariant cannot hold.
  std::vector<std::size_t> identity;
  identity.reserve(axes.size());
  for (const auto& axis : axes) {
    const FeatureValue* current = record.find(axis.feature);
    if (!current)
      throw DataError("record " + record.id + " lacks axis feature " +
                      axis.feature);
    const auto it =
        std::find(axis.values.begin(), axis.values.end(), *current);
    if (it == axis.values.end())
      throw PlanCoverageError("record " + record.id + ": value \"" +
                              current->render() + "\" of axis feature " +
                              axis.feature + " not in the plan's domain");
    identity.push_back(static_cast<std::size_t>(it - axis.values.begin()));
  }

  std::vector<Record> variants;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    if (plan.include_identity || idx != identity) {
      Record variant = record;
      for (std::size_t a = 0; a < axes.size(); ++a)
        variant.set(axes[a].feature, axes[a].values[idx[a]]);
      if (const FeatureValue* s = variant.find(schema.sensitive_feature))
        variant.group = schema.group_of(*s);
      variants.push_back(std::move(variant));
    }
    if (axes.empty()) break;
    // Advance the index tuple, last axis fastest.
    std::size_t a = axes.size();
    while (true) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return variants;
    }
  }
  return variants;
}

PerturbationPlan plan_for_n(const PerturbationPlan& base,
                            std::int64_t requested_n) {
  if (requested_n < 1)
    throw ConfigError("requested N must be positive, got " +
                      std::to_string(requested_n));
  PerturbationPlan plan = base;
  plan.extra_axes.clear();
  std::size_t next_extra = 0;
  while (plan.variant_count() < requested_n) {
    if (next_extra >= base.extra_axes.size())
      throw ConfigError("requested N=" + std::to_string(requested_n) +
                        " not achievable from the configured axes");
    plan.axes.push_back(base.extra_axes[next_extra++]);
  }
  if (plan.variant_count() != requested_n)
    throw ConfigError("requested N=" + std::to_string(requested_n) +
                      " not achievable from the configured axes (reached " +
                      std::to_string(plan.variant_count()) + ")");
  return plan;
}

}  // namespace fairaudit
