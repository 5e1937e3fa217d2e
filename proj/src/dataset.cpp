#include "fairaudit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairaudit/csv.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

FeatureKind kind_from_string(const std::string& s) {
  if (s == "categorical") return FeatureKind::Categorical;
  if (s == "integer") return FeatureKind::Integer;
  if (s == "text") return FeatureKind::Text;
  throw ConfigError("unknown feature kind: " + s);
}

std::string kind_to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Categorical: return "categorical";
    case FeatureKind::Integer: return "integer";
    case FeatureKind::Text: return "text";
  }
  return "text";
}

std::int64_t parse_integer_cell(const std::string& cell) {
  if (cell.empty()) throw DataError("empty integer cell");
  std::size_t consumed = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(cell, &consumed);
  } catch (const std::exception&) {
    throw DataError("not an integer: \"" + cell + "\"");
  }
  if (consumed != cell.size())
    throw DataError("not an integer: \"" + cell + "\"");
  return v;
}

}  // namespace

FeatureValue FeatureSpec::parse(const std::string& cell) const {
  switch (kind) {
    case FeatureKind::Categorical: {
      if (std::find(domain.begin(), domain.end(), cell) == domain.end()) {
        throw DataError("feature " + name + ": value \"" + cell +
                        "\" not in declared domain");
      }
      return FeatureValue::categorical(cell);
    }
    case FeatureKind::Integer: {
      std::int64_t v;
      try {
        v = parse_integer_cell(cell);
      } catch (const DataError&) {
        throw DataError("feature " + name + ": not an integer: \"" + cell +
                        "\"");
      }
      if (min && v < *min)
        throw DataError("feature " + name + ": " + std::to_string(v) +
                        " below minimum " + std::to_string(*min));
      if (max && v > *max)
        throw DataError("feature " + name + ": " + std::to_string(v) +
                        " above maximum " + std::to_string(*max));
      return FeatureValue::integer(v);
    }
    case FeatureKind::Text:
      return FeatureValue::text(cell);
  }
  throw DataError("feature " + name + ": unknown kind");
}

SchemaConfig SchemaConfig::compas_default() {
  SchemaConfig s;
  auto cat = [](std::string name, std::string column,
                std::vector<std::string> domain) {
    FeatureSpec f;
    f.name = std::move(name);
    f.column = std::move(column);
    f.kind = FeatureKind::Categorical;
    f.domain = std::move(domain);
    return f;
  };
  auto num = [](std::string name, std::string column,
                std::optional<std::int64_t> min,
                std::optional<std::int64_t> max) {
    FeatureSpec f;
    f.name = std::move(name);
    f.column = std::move(column);
    f.kind = FeatureKind::Integer;
    f.min = min;
    f.max = max;
    return f;
  };
  auto txt = [](std::string name, std::string column) {
    FeatureSpec f;
    f.name = std::move(name);
    f.column = std::move(column);
    f.kind = FeatureKind::Text;
    return f;
  };
  s.features.push_back(cat("sex", "sex", {"Male", "Female"}));
  s.features.push_back(num("age", "age", 1, std::nullopt));
  s.features.push_back(cat("race", "race",
                           {"African-American", "Caucasian", "Hispanic",
                            "Other", "Asian", "Native American"}));
  s.features.push_back(num("juvenile_felony_count", "juv_fel_count", 0,
                           std::nullopt));
  s.features.push_back(num("juvenile_misdemeanor_count", "juv_misd_count", 0,
                           std::nullopt));
  s.features.push_back(num("prior_charge_count", "priors_count", 0,
                           std::nullopt));
  s.features.push_back(txt("charge_description", "c_charge_desc"));
  s.features.push_back(cat("charge_degree", "c_charge_degree", {"F", "M"}));
  s.features.push_back(num("decile_score", "decile_score", 1, 10));
  s.id_column = "id";
  s.label_column = "two_year_recid";
  s.sensitive_feature = "race";
  s.group_values = {{"Caucasian", 0}, {"African-American", 1}};
  return s;
}

SchemaConfig SchemaConfig::from_json(const json& j) {
  SchemaConfig s = compas_default();
  if (j.contains("features")) {
    s.features.clear();
    for (const auto& fj : j.at("features")) {
      FeatureSpec f;
      f.name = fj.at("name").get<std::string>();
      f.column = fj.value("column", f.name);
      f.kind = kind_from_string(fj.value("kind", std::string("text")));
      if (fj.contains("domain"))
        f.domain = fj.at("domain").get<std::vector<std::string>>();
      if (fj.contains("min")) f.min = fj.at("min").get<std::int64_t>();
      if (fj.contains("max")) f.max = fj.at("max").get<std::int64_t>();
      s.features.push_back(std::move(f));
    }
  }
  if (j.contains("id_column")) s.id_column = j.at("id_column").get<std::string>();
  if (j.contains("label_column"))
    s.label_column = j.at("label_column").get<std::string>();
  if (j.contains("sensitive_feature"))
    s.sensitive_feature = j.at("sensitive_feature").get<std::string>();
  if (j.contains("group_values")) {
    s.group_values.clear();
    for (const auto& [k, v] : j.at("group_values").items()) {
      s.group_values[k] = v.get<int>();
    }
  }
  s.validate();
  return s;
}

SchemaConfig SchemaConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("schema file " + path + ": " + e.what());
  }
  return from_json(j);
}

ordered_json SchemaConfig::to_json() const {
  ordered_json j;
  ordered_json fs = ordered_json::array();
  for (const auto& f : features) {
    ordered_json fj;
    fj["name"] = f.name;
    fj["column"] = f.column;
    fj["kind"] = kind_to_string(f.kind);
    if (!f.domain.empty()) fj["domain"] = f.domain;
    if (f.min) fj["min"] = *f.min;
    if (f.max) fj["max"] = *f.max;
    fs.push_back(std::move(fj));
  }
  j["features"] = std::move(fs);
  j["id_column"] = id_column;
  j["label_column"] = label_column;
  j["sensitive_feature"] = sensitive_feature;
  ordered_json gv;
  for (const auto& [k, v] : group_values) gv[k] = v;
  j["group_values"] = std::move(gv);
  return j;
}

void SchemaConfig::validate() const {
  if (features.empty()) throw ConfigError("schema declares no features");
  std::set<std::string> names, columns;
  for (const auto& f : features) {
    if (!names.insert(f.name).second)
      throw ConfigError("duplicate feature name: " + f.name);
    if (!columns.insert(f.column).second)
      throw ConfigError("duplicate mapped column: " + f.column);
    if (f.kind == FeatureKind::Categorical && f.domain.empty())
      throw ConfigError("categorical feature " + f.name + " has empty domain");
  }
  if (!find_feature(sensitive_feature))
    throw ConfigError("sensitive feature \"" + sensitive_feature +
                      "\" not in schema");
  if (group_values.empty())
    throw ConfigError("no group values mapped for sensitive feature");
  for (const auto& [value, id] : group_values) {
    if (id != 0 && id != 1)
      throw ConfigError("group id for \"" + value +
                        "\" must be 0 or 1 (two-group fairness only)");
  }
}

const FeatureSpec* SchemaConfig::find_feature(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::optional<int> SchemaConfig::group_of(const FeatureValue& v) const {
  const auto it = group_values.find(v.render());
  if (it == group_values.end()) return std::nullopt;
  return it->second;
}

const FeatureValue* Record::find(std::string_view name) const {
  for (const auto& [n, v] : features) {
    if (n == name) return &v;
  }
  return nullptr;
}

void Record::set(std::string_view name, FeatureValue v) {
  for (auto& [n, existing] : features) {
    if (n == name) {
      existing = std::move(v);
      return;
    }
  }
  features.emplace_back(std::string(name), std::move(v));
}

LoadResult load_records(std::istream& source, const SchemaConfig& schema,
                        bool strict) {
  schema.validate();
  const CsvTable table = parse_csv(source);

  auto column_index = [&](const std::string& column) -> std::size_t {
    const auto it =
        std::find(table.header.begin(), table.header.end(), column);
    if (it == table.header.end())
      throw DataError("missing required column: " + column, "missing_column");
    return static_cast<std::size_t>(it - table.header.begin());
  };

  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(schema.features.size());
  for (const auto& f : schema.features) feature_cols.push_back(column_index(f.column));
  const std::size_t label_col = column_index(schema.label_column);
  std::optional<std::size_t> id_col;
  if (!schema.id_column.empty()) id_col = column_index(schema.id_column);

  LoadResult result;
  result.rows_total = table.rows.size();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t row_number = i + 1;
    try {
      if (row.size() != table.header.size()) {
        throw DataError("expected " + std::to_string(table.header.size()) +
                        " cells, got " + std::to_string(row.size()));
      }
      Record r;
      r.id = id_col ? row[*id_col] : "row" + std::to_string(row_number);
      for (std::size_t f = 0; f < schema.features.size(); ++f) {
        const FeatureSpec& spec = schema.features[f];
        r.features.emplace_back(spec.name, spec.parse(row[feature_cols[f]]));
      }
      const std::int64_t label = parse_integer_cell(row[label_col]);
      if (label != 0 && label != 1)
        throw DataError("label must be 0 or 1, got " + std::to_string(label));
      r.label = static_cast<int>(label);
      r.group = schema.group_of(*r.find(schema.sensitive_feature));
      result.records.push_back(std::move(r));
    } catch (const DataError& e) {
      if (strict) {
        throw DataError("row " + std::to_string(row_number) + ": " + e.what(),
                        e.code());
      }
      result.issues.push_back({row_number, e.what()});
    }
  }
  return result;
}

void save_records(std::ostream& out, const std::vector<Record>& records,
                  const SchemaConfig& schema) {
  std::vector<std::string> row;
  if (!schema.id_column.empty()) row.push_back(schema.id_column);
  for (const auto& f : schema.features) row.push_back(f.column);
  row.push_back(schema.label_column);
  write_csv_row(out, row);

  for (const auto& r : records) {
    row.clear();
    if (!schema.id_column.empty()) row.push_back(r.id);
    for (const auto& f : schema.features) {
      const FeatureValue* v = r.find(f.name);
      if (!v) throw DataError("record " + r.id + " lacks feature " + f.name);
      row.push_back(v->render());
    }
    row.push_back(std::to_string(r.label));
    write_csv_row(out, row);
  }
}

GroupBalance group_balance_summary(const std::vector<Record>& records,
                                   std::string_view score_feature) {
  GroupBalance balance;
  for (const auto& r : records) {
    const FeatureValue* v = r.find(score_feature);
    if (!v)
      throw DataError("record " + r.id + " lacks feature " +
                      std::string(score_feature));
    if (v->kind() != FeatureKind::Integer)
      throw DataError("feature " + std::string(score_feature) +
                      " is not numeric for record " + r.id);
    if (!r.group) {
      ++balance.excluded;
      continue;
    }
    GroupMean& side = *r.group == 0 ? balance.group0 : balance.group1;
    side.sum += v->number();
    side.count += 1;
  }
  if (balance.group0.count > 0)
    balance.group0.mean = Rational(balance.group0.sum, balance.group0.count);
  if (balance.group1.count > 0)
    balance.group1.mean = Rational(balance.group1.sum, balance.group1.count);
  return balance;
}

}  // namespace fairaudit
