#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

namespace fairaudit {

/// One in-context-learning example: a rendered feature sentence, the value of
/// the sensitive attribute (0 = Caucasian, 1 = African-American), and the
/// answer shown to the model.
struct IclExample {
  std::string rendering;
  int sensitive = 0;  // S_i
  int answer = 0;     // Y_i
};

/// A complete prompt design: instruction, optional extra instruction,
/// in-context examples, feature description, and the closing question.
struct PromptSpec {
  std::string id;  // P1..P8 or custom
  std::string instruction;
  std::optional<std::string> extra_instruction;
  std::vector<IclExample> examples;
  std::string feature_description;
  std::string question;

  /// Paper-default ids (P1..P8) must carry exactly 4 examples; S/Y binary.
  void validate() const;
};

/// Deterministic "name: value" serialization of the listed features, joined
/// with ", ". Backslash and comma inside values are escaped, which keeps the
/// rendering injective over the listed features. Throws ConfigError on an
/// empty feature order or an unknown feature name.
std::string render_sentence(const Record& record,
                            std::span<const std::string> feature_order);

/// Splits a rendering produced by render_sentence back into its
/// "name: value" segments (test oracle helper; exact because values carry no
/// unescaped commas).
std::vector<std::string> split_sentence(const std::string& sentence);

/// Byte-deterministic prompt assembly: instruction, optional extra
/// instruction, examples, feature description, sentence, question.
/// Throws ConfigError on an empty sentence.
std::string render_prompt(const PromptSpec& spec, const std::string& sentence);

/// Example material and wording used to build the paper's P1..P8 set.
/// `example_pool` holds four feature maps (race left to the builder).
struct PromptSetConfig {
  std::string instruction;
  std::string unbias_instruction;
  std::string feature_description;
  std::string question;
  std::vector<std::string> feature_order;
  std::string race_feature = "race";
  std::array<std::string, 2> race_values = {"Caucasian", "African-American"};
  std::vector<std::map<std::string, std::string>> example_pool;  // 4 entries

  static PromptSetConfig defaults();
};

/// Builds the eight paper prompt designs from the configured material:
/// P1 balanced, P2 = P1 + unbias instruction, P3/P4 race-consistent bias,
/// P5/P8 race-only variation over fixed features, P6/P7 single-race examples.
std::vector<PromptSpec> build_paper_prompts(const PromptSetConfig& config);

/// A prompt-set file: either the paper-default set built from example
/// material, or explicit prompt specs.
struct PromptSet {
  std::vector<PromptSpec> prompts;
  std::vector<std::string> feature_order;

  static PromptSet load(const std::string& path);
  static PromptSet from_json(const nlohmann::json& j);
  /// The paper-default set from built-in material.
  static PromptSet paper_default();
};

}  // namespace fairaudit
