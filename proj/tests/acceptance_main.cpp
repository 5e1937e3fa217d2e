// Acceptance suite: one criterion per check, one PASS/FAIL line each.
// Exits nonzero when any criterion fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/harness.hpp"
#include "fairaudit/selftest.hpp"

using namespace fairaudit;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FIXTURES_DIR;

struct Check {
  std::string name;
  std::function<std::string()> run;  // returns a detail string, throws on fail
};

void require(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

fs::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const fs::path p = fs::temp_directory_path() /
                     ("fairaudit-acceptance-" + tag + "-" +
                      std::to_string(rng()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentConfig fixture_experiment(const fs::path& out,
                                    const std::string& backend_file) {
  ExperimentConfig config;
  config.data_path = kFixtures / "records.csv";
  config.schema = SchemaConfig::load((kFixtures / "schema.json").string());
  config.prompt_set = PromptSet::load((kFixtures / "prompts.json").string());
  config.plan = PerturbationPlan::load((kFixtures / "plan.json").string());
  config.backend = BackendConfig::load((kFixtures / backend_file).string());
  config.threshold = Rational(1, 1);
  config.out_dir = out;
  return config;
}

// Criterion: for N=8, every variant vector x original verdict x threshold
// agrees with direct enumeration of Eq. 1 and the Eq. 2 case split.
std::string eq1_eq2_exhaustive() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Rational> thresholds = {
      Rational(0, 1), Rational(1, 2), Rational(7, 8), Rational(9, 10),
      Rational(1, 1)};
  std::int64_t cases = 0;
  for (int original = 0; original <= 1; ++original) {
    for (int mask = 0; mask < 256; ++mask) {
      std::vector<Verdict> variants;
      int matches = 0;
      for (int bit = 0; bit < 8; ++bit) {
        const int v = (mask >> bit) & 1;
        variants.emplace_back(v);
        if (v == original) ++matches;
      }
      const Rational cr = consistency_rate(Verdict(original), variants);
      require(cr == Rational(matches, 8),
              "cr mismatch at mask " + std::to_string(mask));
      for (const Rational& t : thresholds) {
        const int expected = cr >= t ? original : 1 - original;
        require(adjust(Verdict(original), cr, t).value() == expected,
                "adjust mismatch at mask " + std::to_string(mask) + ", t=" +
                    t.to_string());
        ++cases;
      }
    }
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  require(cases == 2560, "expected 2560 cases");
  require(elapsed.count() < 1000, "runtime exceeded 1 s");
  return "2560/2560 cases agree with enumeration in " +
         std::to_string(elapsed.count()) + " ms";
}

// Criterion: group_metrics and fairness_gaps equal an independent
// straight-line tally on 20 seeded random datasets, with exact equality.
std::string metric_exactness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(20250101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 500;
    std::vector<Verdict> verdicts;
    std::vector<int> labels(n), groups(n);
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = int(rng() % 2);
      verdicts.emplace_back(raw[i]);
      labels[i] = int(rng() % 2);
      groups[i] = int(rng() % 2);
    }
    // Straight-line tally, no shared counting code with the library.
    long long tally[2][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}};  // tp fp tn fn
    for (std::size_t i = 0; i < n; ++i) {
      long long* t = tally[groups[i]];
      if (raw[i] == 1 && labels[i] == 1) t[0]++;
      if (raw[i] == 1 && labels[i] == 0) t[1]++;
      if (raw[i] == 0 && labels[i] == 0) t[2]++;
      if (raw[i] == 0 && labels[i] == 1) t[3]++;
    }
    const auto [g0, g1] = group_metrics(verdicts, labels, groups);
    const GroupMetrics* sides[2] = {&g0, &g1};
    for (int g = 0; g < 2; ++g) {
      const GroupMetrics& m = *sides[g];
      const long long* t = tally[g];
      require(m.tp == t[0] && m.fp == t[1] && m.tn == t[2] && m.fn == t[3],
              "confusion counts differ from tally");
      auto expect = [&](const std::optional<Rational>& got, long long num,
                        long long den) {
        if (den == 0) {
          require(!got.has_value(), "rate defined despite zero denominator");
        } else {
          require(got.has_value() && *got == Rational(num, den),
                  "rate differs from tally (tolerance 0)");
        }
      };
      expect(m.tpr, t[0], t[0] + t[3]);
      expect(m.fpr, t[1], t[1] + t[2]);
      expect(m.precision, t[0], t[0] + t[1]);
      expect(m.recall, t[0], t[0] + t[3]);
      expect(m.accuracy, t[0] + t[2], t[0] + t[1] + t[2] + t[3]);
      expect(m.sp, t[0] + t[1], t[0] + t[1] + t[2] + t[3]);
    }
    // Gaps against the tally, exact.
    const FairnessGaps gaps = fairness_gaps(g0, g1);
    auto gap_of = [](long long n0, long long d0, long long n1, long long d1)
        -> std::optional<Rational> {
      if (d0 == 0 || d1 == 0) return std::nullopt;
      return (Rational(n0, d0) - Rational(n1, d1)).abs();
    };
    const auto expected_sp =
        gap_of(tally[0][0] + tally[0][1],
               tally[0][0] + tally[0][1] + tally[0][2] + tally[0][3],
               tally[1][0] + tally[1][1],
               tally[1][0] + tally[1][1] + tally[1][2] + tally[1][3]);
    require(gaps.d_sp == expected_sp, "d_sp differs from tally");
    const auto expected_tpr =
        gap_of(tally[0][0], tally[0][0] + tally[0][3], tally[1][0],
               tally[1][0] + tally[1][3]);
    require(gaps.d_tpr == expected_tpr, "d_tpr differs from tally");
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  require(elapsed.count() < 5000, "runtime exceeded 5 s");
  return "20 datasets (n=500) match the tally oracle exactly in " +
         std::to_string(elapsed.count()) + " ms";
}

// Criterion: the 16-record fixture with the race-keyed classifier shows
// D_sp >= 0.3 before adjustment and exactly 0 after (race axis, identity
// on, t = 1.0).
std::string synthetic_debias() {
  const fs::path out = scratch_dir("debias");
  const ExperimentResult result =
      run_experiment(fixture_experiment(out, "backend_synthetic.json"));
  fs::remove_all(out);
  require(result.report.prompts.size() == 2, "expected two fixture prompts");
  for (const PromptResult& p : result.report.prompts) {
    require(p.original.d_sp.has_value(), "original d_sp undefined");
    require(*p.original.d_sp >= Rational(3, 10), "pre-adjustment d_sp < 0.3");
    require(*p.original.d_sp == Rational(3, 4),
            "pre-adjustment d_sp differs from the hand enumeration");
    require(p.adjusted.d_sp.has_value(), "adjusted d_sp undefined");
    require(*p.adjusted.d_sp == Rational(0, 1),
            "post-adjustment d_sp is not exactly 0");
    require(p.flips == 6, "expected 6 flips per prompt");
  }
  return "d_sp 3/4 -> 0 exactly on both prompts, 6 flips each";
}

// Criterion: flips(t1) is a subset of flips(t2) whenever t1 <= t2, over 200
// random audit sets; t = 0 leaves every verdict unchanged.
std::string threshold_monotonicity() {
  std::mt19937 rng(7777);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_records = 1 + rng() % 30;
    const std::int64_t n_variants = 1 + rng() % 16;
    std::vector<ConsistencyAudit> audits;
    for (std::size_t i = 0; i < n_records; ++i) {
      ConsistencyAudit a;
      a.record_id = "r" + std::to_string(i);
      a.prompt_id = "P1";
      a.original = Verdict(int(rng() % 2));
      for (std::int64_t v = 0; v < n_variants; ++v)
        a.variants.emplace_back(int(rng() % 2));
      a.cr = consistency_rate(a.original, a.variants);
      a.threshold = Rational(9, 10);
      a.adjusted = adjust(a.original, a.cr, a.threshold);
      a.flipped = !(a.adjusted == a.original);
      a.label = int(rng() % 2);
      a.group = int(rng() % 2);
      audits.push_back(std::move(a));
    }
    Rational t1(static_cast<std::int64_t>(rng() % 101), 100);
    Rational t2(static_cast<std::int64_t>(rng() % 101), 100);
    if (t2 < t1) std::swap(t1, t2);

    auto flip_set = [&](const Rational& t) {
      std::set<std::string> flipped;
      for (const auto& a : audits) {
        if (!(adjust(a.original, a.cr, t) == a.original))
          flipped.insert(a.record_id);
      }
      return flipped;
    };
    const auto f1 = flip_set(t1);
    const auto f2 = flip_set(t2);
    for (const auto& id : f1)
      require(f2.contains(id), "flips(t1) not a subset of flips(t2)");

    for (const auto& a : audits)
      require(adjust(a.original, a.cr, Rational(0, 1)) == a.original,
              "t = 0 must keep every verdict");
  }
  return "200 random audit sets: flip sets monotone, t=0 is the identity";
}

// Criterion: two consecutive audit runs against the same replay cache emit
// byte-identical report files and issue zero network requests.
std::string determinism_resume() {
  const fs::path out1 = scratch_dir("resume1");
  const fs::path out2 = scratch_dir("resume2");
  const ExperimentResult r1 =
      run_experiment(fixture_experiment(out1, "backend_replay.json"));
  const ExperimentResult r2 =
      run_experiment(fixture_experiment(out2, "backend_replay.json"));
  require(r1.network_requests == 0, "first run issued network requests");
  require(r2.network_requests == 0, "second run issued network requests");
  for (const char* name :
       {"report.json", "report.csv", "audits.jsonl", "meta.json"}) {
    require(slurp(out1 / name) == slurp(out2 / name),
            std::string(name) + " differs between consecutive runs");
  }
  fs::remove_all(out1);
  fs::remove_all(out2);
  return "both runs byte-identical, 0 network requests each";
}

// Criterion: cr = t keeps the original verdict, asserted at 7/8 and 0.9
// with exact rational comparison.
std::string boundary_semantics() {
  for (int v : {0, 1}) {
    const Verdict original(v);
    require(adjust(original, Rational(7, 8), Rational(7, 8)) == original,
            "cr = t = 7/8 must keep the original");
    require(adjust(original, Rational::parse("0.9"), Rational::parse("0.9")) ==
                original,
            "cr = t = 0.9 must keep the original");
    // Just below the boundary the verdict flips.
    require(!(adjust(original, Rational(7, 8), Rational(9, 10)) == original),
            "7/8 < 0.9 must flip");
  }
  return "boundary kept at cr = t in {7/8, 0.9} for both verdicts";
}

// Substitute for the paper-scale numbers: the bundled fixture reproduces the
// golden report byte-for-byte.
std::string fixture_golden() {
  const fs::path work = scratch_dir("selftest");
  const SelfTestResult result = run_selftest(kFixtures, work);
  fs::remove_all(work);
  for (const auto& line : result.lines)
    if (!result.passed) std::cerr << "  " << line << "\n";
  require(result.passed, "fixture output diverged from the golden report");
  return "golden report.json/report.csv/audits.jsonl/meta.json reproduced "
         "byte-for-byte";
}

// Optional, network-gated: P1 and P4 over a small COMPAS sample against a
// user-supplied endpoint; asserts report structure and (D_m)_o in [0, 1].
// Excluded from CI: it runs only when the environment provides an endpoint.
std::string compas_smoke() {
  const char* endpoint = std::getenv("FAIRAUDIT_SMOKE_ENDPOINT");
  const char* data = std::getenv("FAIRAUDIT_SMOKE_DATA");
  if (!endpoint || !data)
    return "SKIPPED (set FAIRAUDIT_SMOKE_ENDPOINT and FAIRAUDIT_SMOKE_DATA "
           "to run)";

  // First 50 loadable rows of the provided COMPAS export.
  const fs::path out = scratch_dir("smoke");
  const fs::path sample = out / "sample.csv";
  {
    std::ifstream in(data);
    require(static_cast<bool>(in), std::string("cannot open ") + data);
    std::ofstream trimmed(sample);
    std::string line;
    for (int i = 0; i <= 50 && std::getline(in, line); ++i)
      trimmed << line << "\n";
  }

  ExperimentConfig config;
  config.data_path = sample;
  PromptSet set = PromptSet::paper_default();
  std::vector<PromptSpec> selected;
  for (auto& p : set.prompts)
    if (p.id == "P1" || p.id == "P4") selected.push_back(p);
  set.prompts = selected;
  config.prompt_set = set;
  config.backend.kind = BackendKind::HttpEndpoint;
  config.backend.url = endpoint;
  const char* model = std::getenv("FAIRAUDIT_SMOKE_MODEL");
  config.backend.model = model ? model : "llama3";
  const char* auth = std::getenv("FAIRAUDIT_SMOKE_AUTH_ENV");
  if (auth) config.backend.auth_env = auth;
  config.cache_path = out / "cache.jsonl";
  config.out_dir = out / "report";
  config.jobs = 2;

  const ExperimentResult result = run_experiment(config);
  require(result.report.prompts.size() == 2, "expected P1 and P4 results");
  const Rational zero(0, 1), one(1, 1);
  int defined = 0;
  for (const auto& p : result.report.prompts) {
    for (const auto& d :
         {p.original.d_tpr, p.original.d_fpr, p.original.d_precision,
          p.original.d_recall, p.original.d_accuracy, p.original.d_sp}) {
      if (!d) continue;
      ++defined;
      require(*d >= zero && *d <= one, "original gap outside [0, 1]");
    }
  }
  return "P1/P4 over 50 records: " + std::to_string(defined) +
         " defined original gaps, all in [0, 1] (outputs kept in " +
         out.string() + ")";
}

}  // namespace

int main() {
  const std::vector<Check> checks = {
      {"eq1-eq2-exhaustive", eq1_eq2_exhaustive},
      {"metric-exactness", metric_exactness},
      {"synthetic-debias", synthetic_debias},
      {"threshold-monotonicity", threshold_monotonicity},
      {"determinism-resume", determinism_resume},
      {"boundary-semantics", boundary_semantics},
      {"fixture-golden", fixture_golden},
      {"compas-smoke", compas_smoke},
  };
  int failed = 0;
  for (const auto& check : checks) {
    try {
      const std::string detail = check.run();
      const bool skipped = detail.rfind("SKIPPED", 0) == 0;
      std::cout << (skipped ? "SKIP: " : "PASS: ") << check.name << " - "
                << detail << "\n";
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "FAIL: " << check.name << " - " << e.what() << "\n";
    }
  }
  if (failed > 0) {
    std::cout << failed << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
