#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairaudit/rational.hpp"

#include <nlohmann/json_fwd.hpp>

namespace fairaudit {

enum class FeatureKind { Categorical, Integer, Text };

/// One feature value: a categorical token, an integer count/score, or free
/// text. Integer values render in decimal; the other kinds render verbatim.
class FeatureValue {
 public:
  static FeatureValue categorical(std::string v) {
    return FeatureValue(FeatureKind::Categorical, std::move(v), 0);
  }
  static FeatureValue integer(std::int64_t v) {
    return FeatureValue(FeatureKind::Integer, "", v);
  }
  static FeatureValue text(std::string v) {
    return FeatureValue(FeatureKind::Text, std::move(v), 0);
  }

  FeatureKind kind() const { return kind_; }
  const std::string& text() const { return text_; }
  std::int64_t number() const { return number_; }

  /// Canonical text form, identical to the cell that produced the value.
  std::string render() const {
    return kind_ == FeatureKind::Integer ? std::to_string(number_) : text_;
  }

  bool operator==(const FeatureValue& o) const {
    return kind_ == o.kind_ && text_ == o.text_ && number_ == o.number_;
  }

 private:
  FeatureValue(FeatureKind kind, std::string text, std::int64_t number)
      : kind_(kind), text_(std::move(text)), number_(number) {}

  FeatureKind kind_;
  std::string text_;
  std::int64_t number_;
};

/// Declares one schema feature: its canonical name, the source column it is
/// read from, its kind, and the validity constraints.
struct FeatureSpec {
  std::string name;
  std::string column;  // source column; defaults to name
  FeatureKind kind = FeatureKind::Text;
  std::vector<std::string> domain;  // categorical only
  std::optional<std::int64_t> min;  // integer only
  std::optional<std::int64_t> max;  // integer only

  /// Parses and validates one cell. Throws DataError when out of domain,
  /// out of range, or not an integer.
  FeatureValue parse(const std::string& cell) const;
};

/// Column remapping, categorical domains, and the sensitive-feature to
/// group-id mapping for one tabular dataset.
struct SchemaConfig {
  std::vector<FeatureSpec> features;
  std::string id_column;  // empty: synthesize row-index ids
  std::string label_column = "two_year_recid";
  std::string sensitive_feature = "race";
  std::map<std::string, int> group_values;  // e.g. Caucasian->0

  /// Default schema matching the public COMPAS column names.
  static SchemaConfig compas_default();
  static SchemaConfig from_json(const nlohmann::json& j);
  static SchemaConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;

  /// Throws ConfigError on duplicate columns or a sensitive feature that is
  /// not part of the schema.
  void validate() const;

  const FeatureSpec* find_feature(std::string_view name) const;

  /// Group id for a sensitive-feature value; nullopt when the value is not
  /// mapped (such records stay out of the fairness gap computation).
  std::optional<int> group_of(const FeatureValue& v) const;
};

/// One individual: ordered feature vector, ground-truth label, group id.
struct Record {
  std::string id;
  std::vector<std::pair<std::string, FeatureValue>> features;
  int label = 0;                  // 0 = did not recidivate, 1 = did
  std::optional<int> group;       // 0/1, or nullopt for unmapped races

  const FeatureValue* find(std::string_view name) const;
  void set(std::string_view name, FeatureValue v);

  bool operator==(const Record& o) const {
    return id == o.id && label == o.label && group == o.group &&
           features == o.features;
  }
};

struct LoadIssue {
  std::size_t row = 0;  // 1-based data row index (header excluded)
  std::string message;
};

struct LoadResult {
  std::vector<Record> records;
  std::vector<LoadIssue> issues;
  std::size_t rows_total = 0;
};

/// Loads delimited text with a header row into validated Records, preserving
/// input order. Rows violating the schema are skipped with row-indexed
/// diagnostics; with strict=true the first violation aborts the load.
/// Throws DataError for a missing required column or empty input.
LoadResult load_records(std::istream& source, const SchemaConfig& schema,
                        bool strict = false);

/// Writes records back out with the schema's column names (id column first
/// when declared, then features in schema order, then the label).
void save_records(std::ostream& out, const std::vector<Record>& records,
                  const SchemaConfig& schema);

struct GroupMean {
  std::int64_t sum = 0;
  std::int64_t count = 0;
  /// Exact mean; nullopt (undefined) for an empty group, never silently 0.
  std::optional<Rational> mean;
};

struct GroupBalance {
  GroupMean group0;
  GroupMean group1;
  std::size_t excluded = 0;  // records with no group id
};

/// Per-group mean of an integer feature (the decile-score balance check).
/// Throws DataError if the feature is missing or non-numeric for any record.
GroupBalance group_balance_summary(const std::vector<Record>& records,
                                   std::string_view score_feature);

}  // namespace fairaudit
