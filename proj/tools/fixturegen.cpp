// Writes the bundled synthetic fixture tree: a 16-record dataset, a
// race-keyed rule table, configs, the replay cache, and the golden report.
// Fully deterministic so the committed bundle can be regenerated bit-exactly.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairaudit/harness.hpp"

namespace fs = std::filesystem;
using namespace fairaudit;
using nlohmann::ordered_json;

namespace {

constexpr const char* kRecordsCsv =
    "id,sex,age,race,juv_fel_count,juv_misd_count,priors_count,"
    "c_charge_desc,c_charge_degree,decile_score,two_year_recid\n"
    "C1,Male,21,Caucasian,0,0,1,Grand Theft,F,9,1\n"
    "C2,Female,22,Caucasian,0,0,0,Petit Theft,M,2,0\n"
    "C3,Male,23,Caucasian,0,1,2,Battery,M,2,1\n"
    "C4,Female,24,Caucasian,0,0,0,Possession of Cannabis,M,2,0\n"
    "C5,Male,25,Caucasian,1,0,3,Burglary,F,2,1\n"
    "C6,Female,26,Caucasian,0,0,1,Driving Under the Influence,M,2,0\n"
    "C7,Male,27,Caucasian,0,0,2,Aggravated Assault,F,5,0\n"
    "C8,Male,28,Caucasian,0,1,4,Robbery,F,6,1\n"
    "A1,Male,29,African-American,1,0,5,Grand Theft,F,9,1\n"
    "A2,Female,30,African-American,0,0,2,Petit Theft,M,9,0\n"
    "A3,Male,31,African-American,0,2,3,Battery,F,9,1\n"
    "A4,Female,32,African-American,0,0,0,Possession of Cannabis,M,2,0\n"
    "A5,Male,33,African-American,0,0,1,Burglary,F,5,1\n"
    "A6,Female,34,African-American,0,0,0,Driving Under the Influence,M,4,0\n"
    "A7,Male,35,African-American,1,1,2,Aggravated Assault,F,6,1\n"
    "A8,Male,36,African-American,0,0,3,Robbery,F,7,0\n";

ordered_json prompts_json() {
  const PromptSetConfig defaults = PromptSetConfig::defaults();
  ordered_json j;
  j["instruction"] = defaults.instruction;
  j["unbias_instruction"] = defaults.unbias_instruction;
  j["feature_description"] = defaults.feature_description;
  j["question"] = defaults.question;
  j["feature_order"] = defaults.feature_order;
  j["race_feature"] = defaults.race_feature;
  j["race_values"] =
      ordered_json::array({defaults.race_values[0], defaults.race_values[1]});
  ordered_json prompts = ordered_json::array();
  ordered_json pf1;
  pf1["id"] = "PF1";
  pf1["examples"] = ordered_json::array();
  prompts.push_back(std::move(pf1));
  ordered_json pf2;
  pf2["id"] = "PF2";
  pf2["use_unbias"] = true;
  pf2["examples"] = ordered_json::array();
  prompts.push_back(std::move(pf2));
  j["prompts"] = std::move(prompts);
  return j;
}

ordered_json plan_json() {
  ordered_json j;
  ordered_json axis;
  axis["feature"] = "race";
  axis["values"] = ordered_json::array({"Caucasian", "African-American"});
  j["axes"] = ordered_json::array({axis});
  j["include_identity"] = true;
  return j;
}

ordered_json synthetic_backend_json() {
  ordered_json j;
  j["kind"] = "synthetic";
  j["id"] = "fixture-synthetic";
  ordered_json rules = ordered_json::array();
  auto rule = [](const char* contains, int verdict) {
    ordered_json r;
    if (contains) r["contains"] = contains;
    r["verdict"] = verdict;
    return r;
  };
  rules.push_back(rule("decile_score: 9", 1));
  rules.push_back(rule("decile_score: 2", 0));
  rules.push_back(rule("race: African-American", 1));
  rules.push_back(rule(nullptr, 0));
  j["rules"] = std::move(rules);
  j["fixed_timestamp"] = "2025-01-01T00:00:00Z";
  return j;
}

ordered_json replay_backend_json() {
  ordered_json j;
  j["kind"] = "replay";
  j["id"] = "fixture-replay";
  j["cache"] = "cache.jsonl";
  return j;
}

ordered_json manifest_json() {
  ordered_json j;
  j["data"] = "records.csv";
  j["schema"] = "schema.json";
  j["prompts"] = "prompts.json";
  j["plan"] = "plan.json";
  j["backend"] = "backend_replay.json";
  j["threshold"] = "1";
  j["golden"] = "golden";
  return j;
}

// Editable starting points for real COMPAS runs, kept under configs/.
ordered_json paper_prompts_config_json() {
  const PromptSetConfig d = PromptSetConfig::defaults();
  ordered_json j;
  j["instruction"] = d.instruction;
  j["unbias_instruction"] = d.unbias_instruction;
  j["feature_description"] = d.feature_description;
  j["question"] = d.question;
  j["feature_order"] = d.feature_order;
  j["race_feature"] = d.race_feature;
  j["race_values"] = ordered_json::array({d.race_values[0], d.race_values[1]});
  ordered_json pool = ordered_json::array();
  for (const auto& entry : d.example_pool) {
    ordered_json e;
    for (const auto& name : d.feature_order) {
      const auto it = entry.find(name);
      if (it != entry.end()) e[name] = it->second;
    }
    pool.push_back(std::move(e));
  }
  j["example_pool"] = std::move(pool);
  j["prompts"] = "paper-default";
  return j;
}

ordered_json http_backend_example_json() {
  ordered_json j;
  j["kind"] = "http-endpoint";
  j["id"] = "llama3-local";
  j["url"] = "http://localhost:8080/v1/chat/completions";
  j["model"] = "llama3-8b";
  j["temperature"] = 0.0;
  j["max_tokens"] = 8;
  j["auth_env"] = "FAIRAUDIT_API_TOKEN";
  j["max_in_flight"] = 4;
  j["retry_budget"] = 2;
  return j;
}

void write_file(const fs::path& path, const std::string& content) {
  write_atomic(path, content);
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate the fairaudit fixture bundle and config presets"};
  std::string out = "fixtures";
  std::string configs = "configs";
  app.add_option("--out", out, "fixture directory")->capture_default_str();
  app.add_option("--configs", configs, "config preset directory")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path presets(configs);
    write_file(presets / "compas_schema.json",
               SchemaConfig::compas_default().to_json().dump(2) + "\n");
    write_file(presets / "paper_prompts.json",
               paper_prompts_config_json().dump(2) + "\n");
    write_file(presets / "paper_plan.json",
               PerturbationPlan::paper_default().to_json().dump(2) + "\n");
    write_file(presets / "backend_http.example.json",
               http_backend_example_json().dump(2) + "\n");

    const fs::path dir(out);
    fs::create_directories(dir);

    write_file(dir / "records.csv", kRecordsCsv);
    write_file(dir / "schema.json",
               SchemaConfig::compas_default().to_json().dump(2) + "\n");
    write_file(dir / "prompts.json", prompts_json().dump(2) + "\n");
    write_file(dir / "plan.json", plan_json().dump(2) + "\n");
    write_file(dir / "backend_synthetic.json",
               synthetic_backend_json().dump(2) + "\n");
    write_file(dir / "backend_replay.json",
               replay_backend_json().dump(2) + "\n");
    write_file(dir / "fixture.json", manifest_json().dump(2) + "\n");

    // Pass 1: synthetic backend fills the replay cache.
    fs::remove(dir / "cache.jsonl");
    ExperimentConfig fill;
    fill.data_path = dir / "records.csv";
    fill.schema = SchemaConfig::load((dir / "schema.json").string());
    fill.prompt_set = PromptSet::load((dir / "prompts.json").string());
    fill.plan = PerturbationPlan::load((dir / "plan.json").string());
    fill.backend =
        BackendConfig::load((dir / "backend_synthetic.json").string());
    fill.cache_path = dir / "cache.jsonl";
    fill.threshold = Rational(1, 1);
    fill.out_dir = dir / ".gen-tmp";
    fill.jobs = 1;
    run_experiment(fill);
    fs::remove_all(dir / ".gen-tmp");
    std::cout << "wrote " << (dir / "cache.jsonl").string() << "\n";

    // Pass 2: replay run produces the goldens selftest reproduces.
    ExperimentConfig golden = fill;
    golden.backend =
        BackendConfig::load((dir / "backend_replay.json").string());
    golden.cache_path.reset();
    golden.out_dir = dir / "golden";
    const ExperimentResult result = run_experiment(golden);
    std::cout << "wrote " << (dir / "golden").string() << " ("
              << result.audits.size() << " audits)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "fixturegen failed: " << e.what() << "\n";
    return 1;
  }
}
