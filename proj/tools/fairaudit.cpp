// fairaudit: audits binary LLM classifications for counterfactual
// consistency, adjusts inconsistent verdicts, and reports per-group fairness
// gaps before and after adjustment.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"
#include "fairaudit/harness.hpp"
#include "fairaudit/selftest.hpp"

namespace fs = std::filesystem;
using namespace fairaudit;

namespace {

struct AuditArgs {
  std::string data;
  std::string schema;
  std::string prompts;
  std::string plan;
  std::string backend;
  std::string threshold = "0.9";
  std::string out;
  std::string cache;
  std::string formats = "json,table";
  int jobs = 1;
  bool strict = false;
  std::uint64_t seed = 0;
};

ExperimentConfig make_config(const AuditArgs& args) {
  ExperimentConfig config;
  config.data_path = args.data;
  if (!args.schema.empty()) config.schema = SchemaConfig::load(args.schema);
  if (!args.prompts.empty()) config.prompt_set = PromptSet::load(args.prompts);
  if (!args.plan.empty()) config.plan = PerturbationPlan::load(args.plan);
  config.backend = BackendConfig::load(args.backend);
  if (!args.cache.empty()) config.cache_path = args.cache;
  config.threshold = Rational::parse(args.threshold);
  config.out_dir = args.out;
  config.jobs = args.jobs;
  config.strict = args.strict;
  config.seed = args.seed;
  return config;
}

void print_balance(const FairnessReport& report) {
  const auto& dataset = report.meta.dataset;
  if (!dataset.contains("balance")) return;
  const auto& b = dataset.at("balance");
  auto mean_text = [&](const char* side) {
    const auto& m = b.at(side).at("mean");
    return m.is_null() ? std::string("undefined")
                       : m.at("text").get<std::string>();
  };
  std::cout << "group balance (" << dataset.at("balance_feature").get<std::string>()
            << "): group0 mean " << mean_text("group0") << ", group1 mean "
            << mean_text("group1") << "\n";
}

int run_audit(const AuditArgs& args) {
  const ExperimentConfig config = make_config(args);
  const ExperimentResult result = run_experiment(config, parse_formats(args.formats));
  print_balance(result.report);
  std::cout << "audited " << result.audits.size() << " record-prompt pairs ("
            << result.network_requests << " network requests)\n";
  for (const auto& path : result.written)
    std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

int run_sweep_t(const std::string& audits_dir, const std::string& thresholds,
                const std::string& out) {
  const TrailMeta meta = read_trail_meta(audits_dir);
  const auto audits = read_audits(audits_dir);
  const auto sweep = sweep_threshold(meta, audits, parse_threshold_list(thresholds));
  for (const auto& path : emit_threshold_sweep(sweep, out))
    std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

int run_sweep_n(const AuditArgs& args, const std::string& plans_list,
                const std::string& n_list) {
  const ExperimentConfig base = make_config(args);
  std::vector<PerturbationPlan> plans;
  if (!plans_list.empty()) {
    std::istringstream in(plans_list);
    std::string token;
    while (std::getline(in, token, ','))
      if (!token.empty()) plans.push_back(PerturbationPlan::load(token));
  }
  if (!n_list.empty()) {
    std::istringstream in(n_list);
    std::string token;
    while (std::getline(in, token, ',')) {
      if (token.empty()) continue;
      plans.push_back(plan_for_n(base.plan, std::stoll(token)));
    }
  }
  const auto sweep = sweep_perturbations(base, plans);
  for (const auto& path : emit_perturbation_sweep(sweep, base.out_dir))
    std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

int run_report(const std::string& audits_dir, const std::string& formats,
               const std::string& out) {
  const TrailMeta meta = read_trail_meta(audits_dir);
  const auto audits = read_audits(audits_dir);
  const FairnessReport report = report_from_audits(meta, audits);
  for (const auto& path : emit_report(report, parse_formats(formats), out))
    std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

int run_cache(const std::string& action, const std::string& cache_path) {
  ResponseCache cache{fs::path(cache_path)};
  if (action == "ls") {
    std::cout << cache.size() << " entries";
    if (cache.corrupt_lines() > 0)
      std::cout << " (" << cache.corrupt_lines() << " corrupt lines skipped)";
    std::cout << "\n";
    for (const auto& e : cache.entries()) {
      std::cout << e.key.substr(0, 12) << "  verdict=" << e.verdict << "  "
                << e.backend_id << "  " << e.timestamp << "\n";
    }
    return kExitOk;
  }
  if (action == "verify") {
    std::size_t bad = 0;
    for (const auto& e : cache.entries()) {
      std::string problem;
      if (e.key.size() != 64 || e.prompt_digest.size() != 64)
        problem = "malformed digest";
      try {
        if (problem.empty() && parse_verdict(e.raw).value() != e.verdict)
          problem = "stored verdict disagrees with raw response";
      } catch (const UnparseableOutputError&) {
        problem = "raw response is unparseable";
      }
      if (!problem.empty()) {
        ++bad;
        std::cout << "BAD " << e.key.substr(0, 12) << ": " << problem << "\n";
      }
    }
    std::cout << cache.size() << " entries, " << bad << " bad, "
              << cache.corrupt_lines() << " corrupt lines\n";
    return bad == 0 && cache.corrupt_lines() == 0 ? kExitOk : kExitData;
  }
  if (action == "gc") {
    // Rewrite keeping the first valid entry per key.
    std::string content;
    std::size_t kept = 0;
    for (const auto& e : cache.entries()) {
      content += ResponseCache::entry_to_json(e).dump();
      content += '\n';
      ++kept;
    }
    write_atomic(cache_path, content);
    std::cout << "kept " << kept << " entries, dropped "
              << cache.corrupt_lines() << " corrupt lines\n";
    return kExitOk;
  }
  throw ConfigError("unknown cache action: " + action);
}

int run_prompts_show(const std::string& prompts_path) {
  const PromptSet set = prompts_path.empty() ? PromptSet::paper_default()
                                             : PromptSet::load(prompts_path);
  for (const auto& spec : set.prompts) {
    std::cout << "=== " << spec.id << " ===\n";
    for (const auto& ex : spec.examples)
      std::cout << "  example S=" << ex.sensitive << " Y=" << ex.answer << "\n";
    std::cout << render_prompt(spec, "<sentence>") << "\n";
  }
  return kExitOk;
}

int run_selftest_cmd(const std::string& fixtures) {
  std::mt19937_64 rng(std::random_device{}());
  const fs::path work = fs::temp_directory_path() /
                        ("fairaudit-selftest-" + std::to_string(rng()));
  SelfTestResult result;
  try {
    result = run_selftest(fixtures, work);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(work, ec);
    throw;
  }
  for (const auto& line : result.lines) std::cout << line << "\n";
  std::cout << (result.passed ? "selftest: PASS" : "selftest: FAIL") << "\n";
  std::error_code ec;
  fs::remove_all(work, ec);
  return result.passed ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual-consistency fairness auditor for binary LLM "
               "classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  AuditArgs args;
  std::string audits_dir, thresholds = "0.5,0.75,0.8,0.85,0.9,0.95,1.0";
  std::string out_dir, formats = "json,table,chart";
  std::string cache_path, cache_action, plans_list, n_list;
  std::string fixtures = "fixtures";

  auto add_run_options = [&](CLI::App* cmd, bool need_plan) {
    cmd->add_option("--data", args.data, "dataset CSV path, or - for stdin")
        ->required();
    cmd->add_option("--schema", args.schema,
                    "schema config (default: built-in COMPAS schema)");
    cmd->add_option("--prompts", args.prompts,
                    "prompt-set config (default: built-in paper set P1..P8)");
    if (need_plan)
      cmd->add_option("--plan", args.plan,
                      "perturbation plan (default: sex/race/charge degree, N=8)");
    cmd->add_option("--backend", args.backend, "backend config file")
        ->required();
    cmd->add_option("--t", args.threshold, "consistency threshold")
        ->capture_default_str();
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--cache", args.cache, "response cache file");
    cmd->add_option("--jobs", args.jobs, "concurrent audits")
        ->capture_default_str();
    cmd->add_flag("--strict", args.strict, "abort on the first invalid row");
    cmd->add_option("--seed", args.seed, "seed echoed into the report")
        ->capture_default_str();
  };

  CLI::App* audit = app.add_subcommand("audit", "run a full fairness audit");
  add_run_options(audit, true);
  audit->add_option("--formats", args.formats, "json,table,chart")
      ->capture_default_str();

  CLI::App* sweep_t =
      app.add_subcommand("sweep-t", "re-derive adjusted metrics at several "
                                    "thresholds from stored audits");
  sweep_t->add_option("--audits", audits_dir, "audit trail directory")
      ->required();
  sweep_t->add_option("--thresholds", thresholds, "comma-separated list")
      ->capture_default_str();
  sweep_t->add_option("--out", out_dir, "output directory")->required();

  CLI::App* sweep_n = app.add_subcommand(
      "sweep-n", "run the audit under several perturbation plans");
  add_run_options(sweep_n, true);
  sweep_n->add_option("--plans", plans_list, "comma-separated plan files");
  sweep_n->add_option("--n", n_list,
                      "comma-separated N values derived from the base plan");

  CLI::App* report =
      app.add_subcommand("report", "regenerate reports from an audit trail");
  report->add_option("--audits", audits_dir, "audit trail directory")
      ->required();
  report->add_option("--formats", formats, "json,table,chart")
      ->capture_default_str();
  report->add_option("--out", out_dir, "output directory")->required();

  CLI::App* cache = app.add_subcommand("cache", "inspect the response cache");
  cache->add_option("action", cache_action, "ls | verify | gc")->required();
  cache->add_option("--cache", cache_path, "cache file")->required();

  CLI::App* prompts = app.add_subcommand("prompts", "prompt-set utilities");
  CLI::App* prompts_show =
      prompts->add_subcommand("show", "print the rendered prompt designs");
  prompts_show->add_option("--prompts", args.prompts, "prompt-set config");
  prompts->require_subcommand(1);

  CLI::App* selftest = app.add_subcommand(
      "selftest", "run the bundled fixtures against the golden report");
  selftest->add_option("--fixtures", fixtures, "fixture bundle directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (app.got_subcommand(audit)) return run_audit(args);
    if (app.got_subcommand(sweep_t))
      return run_sweep_t(audits_dir, thresholds, out_dir);
    if (app.got_subcommand(sweep_n)) return run_sweep_n(args, plans_list, n_list);
    if (app.got_subcommand(report)) return run_report(audits_dir, formats, out_dir);
    if (app.got_subcommand(cache)) return run_cache(cache_action, cache_path);
    if (app.got_subcommand(prompts)) return run_prompts_show(args.prompts);
    if (app.got_subcommand(selftest)) return run_selftest_cmd(fixtures);
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.code() << "]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BackendError& e) {
    std::cerr << "backend error [" << e.code() << "]: " << e.what() << "\n";
    return kExitBackend;
  } catch (const DataError& e) {
    std::cerr << "data error [" << e.code() << "]: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
