#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"
#include "fairaudit/harness.hpp"

using namespace fairaudit;
namespace fs = std::filesystem;

namespace {

// Same 16 individuals as the bundled fixture: 8 per group; per group a mix
// of rule-consistent records (decile 9 -> always 1, decile 2 -> always 0)
// and race-keyed records. Expected report enumerated by hand before the
// harness was written (see the frozen checks below).
const char* kFixtureCsv =
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

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() /
           ("fairaudit-harness-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

BackendConfig fixture_backend() {
  BackendConfig b;
  b.kind = BackendKind::Synthetic;
  b.id = "fixture-synthetic";
  b.rules = {{std::string("decile_score: 9"), 1},
             {std::string("decile_score: 2"), 0},
             {std::string("race: African-American"), 1},
             {std::nullopt, 0}};
  return b;
}

PromptSet fixture_prompts() {
  return PromptSet::from_json(nlohmann::json::parse(R"({
    "prompts": [
      {"id": "PF1", "examples": []},
      {"id": "PF2", "use_unbias": true, "examples": []}
    ]
  })"));
}

PerturbationPlan race_plan() {
  PerturbationPlan plan;
  plan.axes = {{"race",
                {FeatureValue::categorical("Caucasian"),
                 FeatureValue::categorical("African-American")}}};
  plan.include_identity = true;
  return plan;
}

ExperimentConfig fixture_config(const fs::path& dir, const Rational& t) {
  const fs::path data = dir / "records.csv";
  {
    std::ofstream out(data);
    out << kFixtureCsv;
  }
  ExperimentConfig config;
  config.data_path = data;
  config.prompt_set = fixture_prompts();
  config.plan = race_plan();
  config.backend = fixture_backend();
  config.threshold = t;
  config.out_dir = dir / "out";
  return config;
}

void check_gap(const std::optional<Rational>& got, std::int64_t num,
               std::int64_t den) {
  REQUIRE(got.has_value());
  CHECK(*got == Rational(num, den));
}

}  // namespace

TEST_CASE("synthetic debias run reproduces the hand-enumerated report") {
  TempDir dir("debias");
  const ExperimentResult result =
      run_experiment(fixture_config(dir.path, Rational(1, 1)));
  const FairnessReport& report = result.report;

  REQUIRE(report.prompts.size() == 2);
  for (const PromptResult& p : report.prompts) {
    CAPTURE(p.prompt_id);
    CHECK(p.audited == 16);
    CHECK(p.unparseable == 0);
    CHECK(p.flips == 6);

    // Original confusion counts per group, enumerated by hand.
    CHECK(p.g0_original.tp == 1);
    CHECK(p.g0_original.fp == 0);
    CHECK(p.g0_original.tn == 4);
    CHECK(p.g0_original.fn == 3);
    CHECK(p.g1_original.tp == 4);
    CHECK(p.g1_original.fp == 3);
    CHECK(p.g1_original.tn == 1);
    CHECK(p.g1_original.fn == 0);

    // Original gaps: D_sp = |1/8 - 7/8| = 3/4 >= 0.3.
    check_gap(p.original.d_sp, 3, 4);
    check_gap(p.original.d_tpr, 3, 4);
    check_gap(p.original.d_fpr, 3, 4);
    check_gap(p.original.d_precision, 3, 7);
    check_gap(p.original.d_recall, 3, 4);
    check_gap(p.original.d_accuracy, 0, 1);

    // Adjusted groups end symmetric: every gap exactly 0.
    CHECK(p.g0_adjusted.tp == 2);
    CHECK(p.g0_adjusted.fp == 1);
    CHECK(p.g0_adjusted.tn == 3);
    CHECK(p.g0_adjusted.fn == 2);
    CHECK(p.g1_adjusted.tp == 2);
    CHECK(p.g1_adjusted.fp == 1);
    CHECK(p.g1_adjusted.tn == 3);
    CHECK(p.g1_adjusted.fn == 2);
    for (const auto& d :
         {p.adjusted.d_tpr, p.adjusted.d_fpr, p.adjusted.d_precision,
          p.adjusted.d_recall, p.adjusted.d_accuracy, p.adjusted.d_sp}) {
      check_gap(d, 0, 1);
    }

    check_gap(p.overall_original.accuracy, 5, 8);
    check_gap(p.overall_original.precision, 5, 8);
    check_gap(p.overall_adjusted.accuracy, 5, 8);
    check_gap(p.overall_adjusted.precision, 2, 3);
  }

  check_gap(report.average_original.d_sp.value, 3, 4);
  check_gap(report.average_adjusted.d_sp.value, 0, 1);

  // Decile balance over the fixture: 30/8 vs 51/8.
  const auto& balance = report.meta.dataset.at("balance");
  CHECK(balance.at("group0").at("mean").at("text") == "3.75");
  CHECK(balance.at("group1").at("mean").at("text") == "6.38");

  CHECK(report.meta.out_of_scope_group == 0);
  CHECK(report.meta.plan_not_covered == 0);
}

TEST_CASE("threshold sweep re-derives verdicts with zero classify calls") {
  TempDir dir("sweept");
  const ExperimentResult result =
      run_experiment(fixture_config(dir.path, Rational(1, 1)));

  const TrailMeta meta = read_trail_meta(dir.path / "out");
  const auto audits = read_audits(dir.path / "out");
  REQUIRE(audits.size() == 32);

  const auto sweep = sweep_threshold(
      meta, audits,
      {Rational(0, 1), Rational(1, 2), Rational(3, 4), Rational(1, 1)});
  REQUIRE(sweep.size() == 4);

  // t = 0: adjusted == original for every audit (Eq. 2 lower boundary).
  CHECK(sweep[0].flips == 0);
  check_gap(sweep[0].adjusted.d_sp.value, 3, 4);

  // cr values in the fixture are only {1/2, 1}; at t = 1/2 the boundary
  // keeps everything.
  CHECK(sweep[1].flips == 0);

  // Above 1/2 every race-keyed record flips: 6 per prompt, both prompts.
  CHECK(sweep[2].flips == 12);
  check_gap(sweep[2].adjusted.d_sp.value, 0, 1);
  CHECK(sweep[3].flips == 12);
  check_gap(sweep[3].adjusted.d_sp.value, 0, 1);

  // Flip sets grow monotonically with t.
  std::vector<std::int64_t> flips;
  for (const auto& s : sweep) flips.push_back(s.flips);
  CHECK(std::is_sorted(flips.begin(), flips.end()));
}

TEST_CASE("perturbation sweep tabulates gaps against N") {
  TempDir dir("sweepn");
  ExperimentConfig base = fixture_config(dir.path, Rational(9, 10));
  // Share one cache across plans: overlapping variants are answered once.
  base.cache_path = dir.path / "cache.jsonl";

  std::vector<PerturbationPlan> plans;
  PerturbationPlan p1;  // N = 1: identity only
  p1.include_identity = true;
  plans.push_back(p1);
  plans.push_back(race_plan());  // N = 2
  PerturbationPlan p3 = race_plan();
  p3.axes.push_back({"sex",
                     {FeatureValue::categorical("Male"),
                      FeatureValue::categorical("Female")}});
  plans.push_back(p3);  // N = 4

  const auto sweep = sweep_perturbations(base, plans);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].n == 1);
  CHECK(sweep[1].n == 2);
  CHECK(sweep[2].n == 4);

  // Identity-only plan: cr = 1 everywhere, nothing flips.
  CHECK(sweep[0].flips == 0);
  check_gap(sweep[0].adjusted.d_sp.value, 3, 4);

  // Race-keyed rule: flip counts non-decreasing in N.
  CHECK(sweep[0].flips <= sweep[1].flips);
  CHECK(sweep[1].flips <= sweep[2].flips);
  CHECK(sweep[1].flips == 12);
  CHECK(sweep[2].flips == 12);

  const auto files = emit_perturbation_sweep(sweep, dir.path / "summary");
  CHECK(files.size() == 2);
}

TEST_CASE("reports regenerate byte-identically from the audit trail") {
  TempDir dir("regen");
  run_experiment(fixture_config(dir.path, Rational(1, 1)));

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string original_json = slurp(dir.path / "out" / "report.json");
  const std::string original_csv = slurp(dir.path / "out" / "report.csv");

  const TrailMeta meta = read_trail_meta(dir.path / "out");
  const auto audits = read_audits(dir.path / "out");
  const FairnessReport rebuilt = report_from_audits(meta, audits);
  const auto files =
      emit_report(rebuilt, {ReportFormat::Json, ReportFormat::Table},
                  dir.path / "regen");
  CHECK(slurp(dir.path / "regen" / "report.json") == original_json);
  CHECK(slurp(dir.path / "regen" / "report.csv") == original_csv);
}

TEST_CASE("report aggregation ignores record ordering") {
  TempDir dir("shuffle");
  const ExperimentResult base =
      run_experiment(fixture_config(dir.path, Rational(1, 1)));

  // Re-run with the data rows shuffled; gap values must not move.
  ExperimentConfig config = fixture_config(dir.path, Rational(1, 1));
  config.out_dir = dir.path / "out2";
  std::vector<std::string> lines;
  {
    std::istringstream in(kFixtureCsv);
    std::string line;
    std::getline(in, line);
    const std::string header = line;
    while (std::getline(in, line)) lines.push_back(line);
    std::mt19937 rng(21);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::ofstream out(dir.path / "records.csv");
    out << header << "\n";
    for (const auto& l : lines) out << l << "\n";
  }
  const ExperimentResult shuffled = run_experiment(config);

  for (std::size_t i = 0; i < base.report.prompts.size(); ++i) {
    CHECK(base.report.prompts[i].original.d_sp ==
          shuffled.report.prompts[i].original.d_sp);
    CHECK(base.report.prompts[i].adjusted.d_sp ==
          shuffled.report.prompts[i].adjusted.d_sp);
    CHECK(base.report.prompts[i].flips == shuffled.report.prompts[i].flips);
  }
}

TEST_CASE("parallel audits produce the same trail as sequential ones") {
  TempDir dir("jobs");
  ExperimentConfig config = fixture_config(dir.path, Rational(1, 1));
  const ExperimentResult sequential = run_experiment(config);

  ExperimentConfig parallel_config = fixture_config(dir.path, Rational(1, 1));
  parallel_config.out_dir = dir.path / "out-par";
  parallel_config.jobs = 8;
  const ExperimentResult parallel = run_experiment(parallel_config);

  REQUIRE(sequential.audits.size() == parallel.audits.size());
  for (std::size_t i = 0; i < sequential.audits.size(); ++i) {
    CHECK(sequential.audits[i].record_id == parallel.audits[i].record_id);
    CHECK(sequential.audits[i].prompt_id == parallel.audits[i].prompt_id);
    CHECK(sequential.audits[i].cr == parallel.audits[i].cr);
    CHECK(sequential.audits[i].adjusted == parallel.audits[i].adjusted);
  }
}

TEST_CASE("emission is deterministic and refuses empty reports") {
  TempDir dir("emit");
  const ExperimentResult result =
      run_experiment(fixture_config(dir.path, Rational(1, 1)));

  const auto a = emit_report(result.report,
                             {ReportFormat::Json, ReportFormat::Table,
                              ReportFormat::Chart},
                             dir.path / "emit1");
  const auto b = emit_report(result.report,
                             {ReportFormat::Json, ReportFormat::Table,
                              ReportFormat::Chart},
                             dir.path / "emit2");
  REQUIRE(a.size() == b.size());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(slurp(a[i]) == slurp(b[i]));

  FairnessReport empty;
  CHECK_THROWS_AS(
      emit_report(empty, {ReportFormat::Json}, dir.path / "never"),
      DataError);
  CHECK_FALSE(fs::exists(dir.path / "never" / "report.json"));
}

TEST_CASE("out-of-scope and uncovered records are excluded with counts") {
  TempDir dir("exclude");
  const fs::path data = dir.path / "records.csv";
  {
    std::ofstream out(data);
    out << "id,sex,age,race,juv_fel_count,juv_misd_count,priors_count,"
           "c_charge_desc,c_charge_degree,decile_score,two_year_recid\n"
           // Hispanic: loaded, but no group id -> out of scope.
           "H1,Male,40,Hispanic,0,0,1,Battery,F,5,1\n"
           "C1,Male,41,Caucasian,0,0,1,Battery,F,5,1\n"
           "A1,Male,42,African-American,0,0,1,Battery,F,5,0\n";
  }
  ExperimentConfig config;
  config.data_path = data;
  config.prompt_set = fixture_prompts();
  config.plan = race_plan();
  config.backend = fixture_backend();
  config.threshold = Rational(1, 1);
  config.out_dir = dir.path / "out";
  const ExperimentResult result = run_experiment(config);
  CHECK(result.report.meta.out_of_scope_group == 1);
  CHECK(result.report.prompts[0].audited == 2);
}

TEST_CASE("threshold list parsing") {
  const auto ts = parse_threshold_list("0.5, 0.75,0.9,1.0");
  REQUIRE(ts.size() == 4);
  CHECK(ts[0] == Rational(1, 2));
  CHECK(ts[3] == Rational(1, 1));
  CHECK_THROWS_AS(parse_threshold_list(""), ConfigError);
  CHECK_THROWS_AS(parse_threshold_list("1.5"), ConfigError);
}
