#include "fairaudit/harness.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit {

using nlohmann::ordered_json;

namespace {

ordered_json balance_json(const GroupBalance& b) {
  auto side = [](const GroupMean& m) {
    ordered_json j;
    j["sum"] = m.sum;
    j["count"] = m.count;
    j["mean"] = rational_json(m.mean);
    return j;
  };
  ordered_json j;
  j["group0"] = side(b.group0);
  j["group1"] = side(b.group1);
  j["excluded"] = b.excluded;
  return j;
}

ordered_json config_echo(const ExperimentConfig& config) {
  ordered_json j;
  j["dataset"] = config.data_path.filename().string();
  j["backend"] = config.backend.effective_id();
  j["backend_kind"] = config.backend.kind == BackendKind::HttpEndpoint
                          ? "http-endpoint"
                          : config.backend.kind == BackendKind::Synthetic
                                ? "synthetic"
                                : "replay";
  j["threshold"] = ordered_json{{"num", config.threshold.num()},
                                {"den", config.threshold.den()},
                                {"text", config.threshold.to_decimal(2)}};
  ordered_json plan = config.plan.to_json();
  plan["n"] = config.plan.variant_count();
  j["plan"] = std::move(plan);
  ordered_json prompt_ids = ordered_json::array();
  for (const auto& p : config.prompt_set.prompts) prompt_ids.push_back(p.id);
  j["prompts"] = std::move(prompt_ids);
  j["jobs"] = config.jobs;
  j["seed"] = config.seed;
  j["strict"] = config.strict;
  return j;
}

struct TaskOutcome {
  std::optional<ConsistencyAudit> audit;
  bool unparseable = false;
};

}  // namespace

void ExperimentConfig::validate() const {
  schema.validate();
  plan.validate(schema);
  backend.validate();
  if (prompt_set.prompts.empty())
    throw ConfigError("experiment needs a non-empty prompt set");
  for (const auto& p : prompt_set.prompts) p.validate();
  const Rational zero(0, 1);
  const Rational one(1, 1);
  if (threshold < zero || threshold > one)
    throw ConfigError("threshold outside [0, 1]: " + threshold.to_string());
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (data_path.empty()) throw ConfigError("experiment needs a dataset path");
  if (out_dir.empty()) throw ConfigError("experiment needs an output directory");
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::set<ReportFormat>& formats) {
  config.validate();

  // Dataset.
  LoadResult loaded;
  if (config.data_path == "-") {
    loaded = load_records(std::cin, config.schema, config.strict);
  } else {
    std::ifstream in(config.data_path);
    if (!in)
      throw DataError("cannot open dataset: " + config.data_path.string());
    loaded = load_records(in, config.schema, config.strict);
  }
  for (const auto& issue : loaded.issues) {
    std::cerr << "warning: " << config.data_path.string() << " row "
              << issue.row << ": " << issue.message << " (skipped)\n";
  }

  // Balance check over everything loaded, before records move out.
  std::optional<GroupBalance> balance;
  if (config.schema.find_feature(config.balance_feature))
    balance = group_balance_summary(loaded.records, config.balance_feature);

  // Scope: only the two mapped groups enter Eq. 3; plan coverage is
  // prompt-independent, so check it once per record up front.
  std::vector<Record> in_scope;
  std::int64_t out_of_scope_group = 0;
  std::int64_t plan_not_covered = 0;
  for (auto& r : loaded.records) {
    if (!r.group) {
      ++out_of_scope_group;
      continue;
    }
    try {
      generate_variants(r, config.plan, config.schema);
    } catch (const PlanCoverageError& e) {
      std::cerr << "warning: " << e.what() << " (excluded)\n";
      ++plan_not_covered;
      continue;
    }
    in_scope.push_back(std::move(r));
  }

  // Backend client with optional persistent cache.
  std::filesystem::path cache_path =
      config.cache_path.value_or(config.backend.cache_path);
  if (config.backend.kind == BackendKind::Replay && cache_path.empty())
    throw ConfigError("replay backend needs a cache file (--cache)");
  auto cache = cache_path.empty()
                   ? std::make_shared<ResponseCache>()
                   : std::make_shared<ResponseCache>(cache_path);
  if (cache->corrupt_lines() > 0) {
    std::cerr << "warning: cache " << cache_path.string() << ": skipped "
              << cache->corrupt_lines() << " corrupt line(s)\n";
  }
  ModelClient client(config.backend, cache);
  Auditor auditor(config.schema, config.plan, config.prompt_set.feature_order,
                  client, config.threshold);

  // prompts x records, prompt-major; results land by task index so the
  // assembled trail is independent of completion order.
  const std::size_t per_prompt = in_scope.size();
  const std::size_t task_count =
      config.prompt_set.prompts.size() * per_prompt;
  std::vector<TaskOutcome> outcomes(task_count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t task = next.fetch_add(1);
      if (task >= task_count) return;
      const std::size_t prompt_idx = task / per_prompt;
      const std::size_t record_idx = task % per_prompt;
      try {
        outcomes[task].audit = auditor.audit_record(
            in_scope[record_idx], config.prompt_set.prompts[prompt_idx]);
      } catch (const UnparseableOutputError& e) {
        std::cerr << "warning: record " << in_scope[record_idx].id
                  << ", prompt " << config.prompt_set.prompts[prompt_idx].id
                  << ": " << e.what() << " (excluded)\n";
        outcomes[task].unparseable = true;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const int thread_count =
      std::max(1, std::min<int>(config.jobs, static_cast<int>(task_count)));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  // Assemble in task order; per-prompt unparseable counts feed the report.
  std::vector<ConsistencyAudit> audits;
  std::map<std::string, std::int64_t> unparseable;
  for (const auto& p : config.prompt_set.prompts) unparseable[p.id] = 0;
  for (std::size_t task = 0; task < task_count; ++task) {
    const std::size_t prompt_idx = task / per_prompt;
    if (outcomes[task].audit) {
      audits.push_back(std::move(*outcomes[task].audit));
    } else if (outcomes[task].unparseable) {
      ++unparseable[config.prompt_set.prompts[prompt_idx].id];
    }
  }

  TrailMeta meta;
  meta.config = config_echo(config);
  ordered_json dataset;
  dataset["records_total"] = loaded.rows_total;
  dataset["loaded"] = loaded.records.size();
  dataset["rejected_rows"] = loaded.issues.size();
  dataset["in_scope"] = in_scope.size();
  if (balance) {
    dataset["balance_feature"] = config.balance_feature;
    dataset["balance"] = balance_json(*balance);
  }
  meta.dataset = std::move(dataset);
  meta.out_of_scope_group = out_of_scope_group;
  meta.plan_not_covered = plan_not_covered;
  for (const auto& p : config.prompt_set.prompts)
    meta.prompt_order.push_back(p.id);
  meta.unparseable = unparseable;
  meta.threshold = config.threshold;

  // Persist whatever completed before surfacing a backend failure, so an
  // interrupted run can resume from the cache.
  if (fatal) {
    write_audit_trail(config.out_dir, meta, audits);
    std::rethrow_exception(fatal);
  }

  write_audit_trail(config.out_dir, meta, audits);

  ExperimentResult result;
  result.report = report_from_audits(meta, audits);
  result.audits = std::move(audits);
  result.network_requests = client.network_requests();
  result.written = emit_report(result.report, formats, config.out_dir);
  return result;
}

std::vector<ThresholdSummary> sweep_threshold(
    const TrailMeta& meta, const std::vector<ConsistencyAudit>& audits,
    const std::vector<Rational>& thresholds) {
  if (thresholds.empty()) throw ConfigError("no thresholds given");
  std::map<std::string, std::vector<ConsistencyAudit>> by_prompt;
  for (const auto& a : audits) by_prompt[a.prompt_id].push_back(a);

  std::vector<ThresholdSummary> out;
  out.reserve(thresholds.size());
  for (const Rational& t : thresholds) {
    // Re-derive adjusted verdicts at t; classification is threshold-free.
    ThresholdSummary summary;
    summary.threshold = t;
    std::vector<PromptResult> prompt_results;
    for (const auto& id : meta.prompt_order) {
      const auto it = by_prompt.find(id);
      if (it == by_prompt.end()) continue;
      PromptResult pr = aggregate_prompt(id, it->second, 0, t);
      summary.flips += pr.flips;
      prompt_results.push_back(std::move(pr));
    }
    // Average adjusted gaps across prompts, skipping undefined entries.
    auto avg = [&](auto pick) {
      GapAverage g;
      Rational sum(0, 1);
      std::int64_t count = 0;
      for (const auto& pr : prompt_results) {
        const std::optional<Rational>& v = pick(pr);
        if (!v) {
          ++g.skipped;
          continue;
        }
        sum = sum + *v;
        ++count;
      }
      if (count > 0) g.value = sum.divided_by(count);
      return g;
    };
    summary.adjusted.d_tpr =
        avg([](const PromptResult& p) { return p.adjusted.d_tpr; });
    summary.adjusted.d_fpr =
        avg([](const PromptResult& p) { return p.adjusted.d_fpr; });
    summary.adjusted.d_precision =
        avg([](const PromptResult& p) { return p.adjusted.d_precision; });
    summary.adjusted.d_recall =
        avg([](const PromptResult& p) { return p.adjusted.d_recall; });
    summary.adjusted.d_accuracy =
        avg([](const PromptResult& p) { return p.adjusted.d_accuracy; });
    summary.adjusted.d_sp =
        avg([](const PromptResult& p) { return p.adjusted.d_sp; });
    summary.avg_accuracy =
        avg([](const PromptResult& p) { return p.overall_adjusted.accuracy; });
    summary.avg_precision = avg(
        [](const PromptResult& p) { return p.overall_adjusted.precision; });
    out.push_back(std::move(summary));
  }
  return out;
}

std::vector<std::filesystem::path> emit_threshold_sweep(
    const std::vector<ThresholdSummary>& sweep,
    const std::filesystem::path& out_dir) {
  if (sweep.empty()) throw DataError("empty threshold sweep");
  std::filesystem::create_directories(out_dir);

  ordered_json j = ordered_json::array();
  for (const auto& s : sweep) {
    ordered_json sj;
    sj["threshold"] = ordered_json{{"num", s.threshold.num()},
                                   {"den", s.threshold.den()},
                                   {"text", s.threshold.to_decimal(2)}};
    sj["flips"] = s.flips;
    ordered_json gaps;
    auto gj = [](const GapAverage& a) {
      ordered_json x;
      x["value"] = rational_json(a.value);
      x["skipped"] = a.skipped;
      return x;
    };
    gaps["d_tpr"] = gj(s.adjusted.d_tpr);
    gaps["d_fpr"] = gj(s.adjusted.d_fpr);
    gaps["d_precision"] = gj(s.adjusted.d_precision);
    gaps["d_recall"] = gj(s.adjusted.d_recall);
    gaps["d_accuracy"] = gj(s.adjusted.d_accuracy);
    gaps["d_sp"] = gj(s.adjusted.d_sp);
    sj["adjusted_gaps"] = std::move(gaps);
    sj["overall"] = ordered_json{{"accuracy", gj(s.avg_accuracy)},
                                 {"precision", gj(s.avg_precision)}};
    j.push_back(std::move(sj));
  }

  std::ostringstream csv;
  csv << "t,flips,d_tpr,d_fpr,d_precision,d_recall,d_accuracy,d_sp,"
         "accuracy,precision\n";
  auto cell = [](const GapAverage& a) {
    return a.value ? a.value->to_decimal(2) : std::string("undef");
  };
  for (const auto& s : sweep) {
    csv << s.threshold.to_decimal(2) << ',' << s.flips << ','
        << cell(s.adjusted.d_tpr) << ',' << cell(s.adjusted.d_fpr) << ','
        << cell(s.adjusted.d_precision) << ',' << cell(s.adjusted.d_recall)
        << ',' << cell(s.adjusted.d_accuracy) << ',' << cell(s.adjusted.d_sp)
        << ',' << cell(s.avg_accuracy) << ',' << cell(s.avg_precision)
        << '\n';
  }

  std::vector<std::filesystem::path> written;
  write_atomic(out_dir / "sweep_t.json", j.dump(2) + "\n");
  written.push_back(out_dir / "sweep_t.json");
  write_atomic(out_dir / "sweep_t.csv", csv.str());
  written.push_back(out_dir / "sweep_t.csv");
  return written;
}

std::vector<PlanSummary> sweep_perturbations(
    const ExperimentConfig& base, const std::vector<PerturbationPlan>& plans) {
  if (plans.empty()) throw ConfigError("no plans given for the N sweep");
  std::vector<PlanSummary> out;
  for (const auto& plan : plans) {
    ExperimentConfig config = base;
    config.plan = plan;
    const std::int64_t n = plan.variant_count();
    config.out_dir = base.out_dir / ("n" + std::to_string(n));
    const ExperimentResult result = run_experiment(config);
    PlanSummary summary;
    summary.n = n;
    summary.original = result.report.average_original;
    summary.adjusted = result.report.average_adjusted;
    for (const auto& p : result.report.prompts) summary.flips += p.flips;
    summary.out_dir = config.out_dir;
    out.push_back(std::move(summary));
  }
  return out;
}

std::vector<std::filesystem::path> emit_perturbation_sweep(
    const std::vector<PlanSummary>& sweep,
    const std::filesystem::path& out_dir) {
  if (sweep.empty()) throw DataError("empty perturbation sweep");
  std::filesystem::create_directories(out_dir);

  ordered_json j = ordered_json::array();
  auto gj = [](const GapAverage& a) {
    ordered_json x;
    x["value"] = rational_json(a.value);
    x["skipped"] = a.skipped;
    return x;
  };
  auto gaps_block = [&](const AverageGaps& g) {
    ordered_json x;
    x["d_tpr"] = gj(g.d_tpr);
    x["d_fpr"] = gj(g.d_fpr);
    x["d_precision"] = gj(g.d_precision);
    x["d_recall"] = gj(g.d_recall);
    x["d_accuracy"] = gj(g.d_accuracy);
    x["d_sp"] = gj(g.d_sp);
    return x;
  };
  for (const auto& s : sweep) {
    ordered_json sj;
    sj["n"] = s.n;
    sj["flips"] = s.flips;
    sj["original_gaps"] = gaps_block(s.original);
    sj["adjusted_gaps"] = gaps_block(s.adjusted);
    sj["audits_dir"] = s.out_dir.filename().string();
    j.push_back(std::move(sj));
  }

  std::ostringstream csv;
  csv << "n,flips,d_tpr_o,d_tpr_a,d_fpr_o,d_fpr_a,d_pre_o,d_pre_a,"
         "d_rec_o,d_rec_a,d_acc_o,d_acc_a,d_sp_o,d_sp_a\n";
  auto cell = [](const GapAverage& a) {
    return a.value ? a.value->to_decimal(2) : std::string("undef");
  };
  for (const auto& s : sweep) {
    csv << s.n << ',' << s.flips << ',' << cell(s.original.d_tpr) << ','
        << cell(s.adjusted.d_tpr) << ',' << cell(s.original.d_fpr) << ','
        << cell(s.adjusted.d_fpr) << ',' << cell(s.original.d_precision)
        << ',' << cell(s.adjusted.d_precision) << ','
        << cell(s.original.d_recall) << ',' << cell(s.adjusted.d_recall)
        << ',' << cell(s.original.d_accuracy) << ','
        << cell(s.adjusted.d_accuracy) << ',' << cell(s.original.d_sp) << ','
        << cell(s.adjusted.d_sp) << '\n';
  }

  std::vector<std::filesystem::path> written;
  write_atomic(out_dir / "sweep_n.json", j.dump(2) + "\n");
  written.push_back(out_dir / "sweep_n.json");
  write_atomic(out_dir / "sweep_n.csv", csv.str());
  written.push_back(out_dir / "sweep_n.csv");
  return written;
}

std::vector<Rational> parse_threshold_list(const std::string& list) {
  std::vector<Rational> thresholds;
  std::string token;
  std::istringstream in(list);
  while (std::getline(in, token, ',')) {
    while (!token.empty() && token.front() == ' ') token.erase(0, 1);
    while (!token.empty() && token.back() == ' ') token.pop_back();
    if (token.empty()) continue;
    const Rational t = Rational::parse(token);
    if (t < Rational(0, 1) || t > Rational(1, 1))
      throw ConfigError("threshold outside [0, 1]: " + token);
    thresholds.push_back(t);
  }
  if (thresholds.empty()) throw ConfigError("no thresholds given");
  return thresholds;
}

}  // namespace fairaudit
