#include "fairaudit/selftest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"
#include "fairaudit/harness.hpp"

namespace fairaudit {

using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// First line where the two texts diverge (1-based), or 0 when identical.
std::size_t first_divergence(const std::string& got, const std::string& want,
                             std::string& detail) {
  std::istringstream a(got), b(want);
  std::string la, lb;
  std::size_t line = 0;
  while (true) {
    ++line;
    const bool ha = static_cast<bool>(std::getline(a, la));
    const bool hb = static_cast<bool>(std::getline(b, lb));
    if (!ha && !hb) return 0;
    if (ha != hb || la != lb) {
      detail = "got:  " + (ha ? la : std::string("<eof>")) +
               "\n  want: " + (hb ? lb : std::string("<eof>"));
      return line;
    }
  }
}

}  // namespace

SelfTestResult run_selftest(const std::filesystem::path& fixtures_dir,
                            const std::filesystem::path& work_dir) {
  const auto manifest_path = fixtures_dir / "fixture.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in)
    throw ConfigError("cannot open fixture manifest: " +
                      manifest_path.string());
  json manifest;
  try {
    manifest_in >> manifest;
  } catch (const json::exception& e) {
    throw ConfigError("fixture manifest: " + std::string(e.what()));
  }

  ExperimentConfig config;
  config.data_path = fixtures_dir / manifest.at("data").get<std::string>();
  config.schema =
      SchemaConfig::load((fixtures_dir / manifest.at("schema").get<std::string>()).string());
  config.prompt_set =
      PromptSet::load((fixtures_dir / manifest.at("prompts").get<std::string>()).string());
  config.plan = PerturbationPlan::load(
      (fixtures_dir / manifest.at("plan").get<std::string>()).string());
  config.backend = BackendConfig::load(
      (fixtures_dir / manifest.at("backend").get<std::string>()).string());
  config.threshold = Rational::parse(manifest.at("threshold").get<std::string>());
  config.out_dir = work_dir;
  config.jobs = 1;

  run_experiment(config);

  const auto golden_dir =
      fixtures_dir / manifest.at("golden").get<std::string>();
  SelfTestResult result;
  result.passed = true;
  for (const auto& name :
       {"report.json", "report.csv", "audits.jsonl", "meta.json"}) {
    const std::string got = slurp(work_dir / name);
    const std::string want = slurp(golden_dir / name);
    std::string detail;
    const std::size_t line = first_divergence(got, want, detail);
    if (line == 0) {
      result.lines.push_back(std::string("ok   ") + name);
    } else {
      result.passed = false;
      result.lines.push_back(std::string("FAIL ") + name + ": first diff at line " +
                             std::to_string(line) + "\n  " + detail);
    }
  }
  return result;
}

}  // namespace fairaudit
