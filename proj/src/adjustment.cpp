#include "fairaudit/adjustment.hpp"

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit {

using nlohmann::json;
using nlohmann::ordered_json;

Rational consistency_rate(Verdict original,
                          std::span<const Verdict> variants) {
  if (variants.empty())
    throw DataError("consistency rate needs at least one variant");
  std::int64_t matches = 0;
  for (const Verdict& v : variants) matches += v == original ? 1 : 0;
  return Rational(matches, static_cast<std::int64_t>(variants.size()));
}

Verdict adjust(Verdict original, const Rational& cr, const Rational& t) {
  const Rational zero(0, 1);
  const Rational one(1, 1);
  if (cr < zero || cr > one)
    throw DataError("consistency rate outside [0, 1]: " + cr.to_string());
  if (t < zero || t > one)
    throw DataError("threshold outside [0, 1]: " + t.to_string());
  return cr >= t ? original : original.flipped();
}

ordered_json ConsistencyAudit::to_json() const {
  ordered_json j;
  j["record_id"] = record_id;
  j["prompt_id"] = prompt_id;
  j["original"] = original.value();
  ordered_json vs = ordered_json::array();
  for (const Verdict& v : variants) vs.push_back(v.value());
  j["variants"] = std::move(vs);
  j["cr"] = ordered_json{{"num", cr.num()}, {"den", cr.den()}};
  j["threshold"] =
      ordered_json{{"num", threshold.num()}, {"den", threshold.den()}};
  j["adjusted"] = adjusted.value();
  j["flipped"] = flipped;
  j["label"] = label;
  if (group) {
    j["group"] = *group;
  } else {
    j["group"] = nullptr;
  }
  return j;
}

ConsistencyAudit ConsistencyAudit::from_json(const json& j) {
  ConsistencyAudit a;
  a.record_id = j.at("record_id").get<std::string>();
  a.prompt_id = j.at("prompt_id").get<std::string>();
  a.original = Verdict(j.at("original").get<int>());
  for (const auto& v : j.at("variants"))
    a.variants.push_back(Verdict(v.get<int>()));
  a.cr = Rational(j.at("cr").at("num").get<std::int64_t>(),
                  j.at("cr").at("den").get<std::int64_t>());
  a.threshold = Rational(j.at("threshold").at("num").get<std::int64_t>(),
                         j.at("threshold").at("den").get<std::int64_t>());
  a.adjusted = Verdict(j.at("adjusted").get<int>());
  a.flipped = j.at("flipped").get<bool>();
  a.label = j.at("label").get<int>();
  if (j.contains("group") && !j.at("group").is_null())
    a.group = j.at("group").get<int>();
  return a;
}

Auditor::Auditor(const SchemaConfig& schema, const PerturbationPlan& plan,
                 std::vector<std::string> feature_order, ModelClient& client,
                 Rational threshold)
    : schema_(schema),
      plan_(plan),
      feature_order_(std::move(feature_order)),
      client_(client),
      threshold_(threshold) {
  const Rational zero(0, 1);
  const Rational one(1, 1);
  if (threshold_ < zero || threshold_ > one)
    throw ConfigError("threshold outside [0, 1]: " + threshold_.to_string());
}

ConsistencyAudit Auditor::audit_record(const Record& record,
                                       const PromptSpec& prompt) const {
  ConsistencyAudit audit;
  audit.record_id = record.id;
  audit.prompt_id = prompt.id;
  audit.label = record.label;
  audit.group = record.group;
  audit.threshold = threshold_;

  const std::string sentence = render_sentence(record, feature_order_);
  audit.original = client_.classify(render_prompt(prompt, sentence));

  const std::vector<Record> variants =
      generate_variants(record, plan_, schema_);
  audit.variants.reserve(variants.size());
  for (const Record& variant : variants) {
    const std::string variant_sentence =
        render_sentence(variant, feature_order_);
    audit.variants.push_back(
        client_.classify(render_prompt(prompt, variant_sentence)));
  }

  audit.cr = consistency_rate(audit.original, audit.variants);
  audit.adjusted = adjust(audit.original, audit.cr, threshold_);
  audit.flipped = !(audit.adjusted == audit.original);
  return audit;
}

}  // namespace fairaudit
