#include "fairaudit/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "fairaudit/chart.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int hundredths(const Rational& r) {
  const __int128 scaled = static_cast<__int128>(r.num()) * 100;
  __int128 q = scaled / r.den();
  const __int128 rem = scaled % r.den();
  if (2 * rem >= r.den()) ++q;
  return static_cast<int>(q);
}

std::string cell(const std::optional<Rational>& r) {
  return r ? r->to_decimal(2) : "undef";
}

ordered_json group_metrics_json(const GroupMetrics& m) {
  ordered_json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["tpr"] = rational_json(m.tpr);
  j["fpr"] = rational_json(m.fpr);
  j["precision"] = rational_json(m.precision);
  j["recall"] = rational_json(m.recall);
  j["accuracy"] = rational_json(m.accuracy);
  j["sp"] = rational_json(m.sp);
  return j;
}

ordered_json gaps_json(const FairnessGaps& g) {
  ordered_json j;
  j["d_tpr"] = rational_json(g.d_tpr);
  j["d_fpr"] = rational_json(g.d_fpr);
  j["d_precision"] = rational_json(g.d_precision);
  j["d_recall"] = rational_json(g.d_recall);
  j["d_accuracy"] = rational_json(g.d_accuracy);
  j["d_sp"] = rational_json(g.d_sp);
  return j;
}

ordered_json overall_json(const OverallPerformance& p) {
  ordered_json j;
  j["accuracy"] = rational_json(p.accuracy);
  j["precision"] = rational_json(p.precision);
  return j;
}

ordered_json gap_average_json(const GapAverage& a) {
  ordered_json j;
  j["value"] = rational_json(a.value);
  j["skipped"] = a.skipped;
  return j;
}

ordered_json average_gaps_json(const AverageGaps& a) {
  ordered_json j;
  j["d_tpr"] = gap_average_json(a.d_tpr);
  j["d_fpr"] = gap_average_json(a.d_fpr);
  j["d_precision"] = gap_average_json(a.d_precision);
  j["d_recall"] = gap_average_json(a.d_recall);
  j["d_accuracy"] = gap_average_json(a.d_accuracy);
  j["d_sp"] = gap_average_json(a.d_sp);
  return j;
}

GapAverage average_of(
    const std::vector<PromptResult>& prompts,
    const std::function<const std::optional<Rational>&(const PromptResult&)>&
        pick) {
  GapAverage avg;
  Rational sum(0, 1);
  std::int64_t count = 0;
  for (const auto& p : prompts) {
    const std::optional<Rational>& v = pick(p);
    if (!v) {
      ++avg.skipped;
      continue;
    }
    sum = sum + *v;
    ++count;
  }
  if (count > 0) avg.value = sum.divided_by(count);
  return avg;
}

AverageGaps average_gaps(const std::vector<PromptResult>& prompts,
                         bool adjusted) {
  auto field = [adjusted](const PromptResult& p) -> const FairnessGaps& {
    return adjusted ? p.adjusted : p.original;
  };
  AverageGaps a;
  a.d_tpr = average_of(prompts, [&](const PromptResult& p)
                                    -> const std::optional<Rational>& {
    return field(p).d_tpr;
  });
  a.d_fpr = average_of(prompts, [&](const PromptResult& p)
                                    -> const std::optional<Rational>& {
    return field(p).d_fpr;
  });
  a.d_precision = average_of(prompts, [&](const PromptResult& p)
                                          -> const std::optional<Rational>& {
    return field(p).d_precision;
  });
  a.d_recall = average_of(prompts, [&](const PromptResult& p)
                                       -> const std::optional<Rational>& {
    return field(p).d_recall;
  });
  a.d_accuracy = average_of(prompts, [&](const PromptResult& p)
                                         -> const std::optional<Rational>& {
    return field(p).d_accuracy;
  });
  a.d_sp = average_of(prompts, [&](const PromptResult& p)
                                   -> const std::optional<Rational>& {
    return field(p).d_sp;
  });
  return a;
}

}  // namespace

ordered_json rational_json(const std::optional<Rational>& r) {
  if (!r) return nullptr;
  ordered_json j;
  j["num"] = r->num();
  j["den"] = r->den();
  j["text"] = r->to_decimal(2);
  return j;
}

ordered_json TrailMeta::to_json() const {
  ordered_json j;
  j["tool"] = kToolVersion;
  j["config"] = config;
  j["dataset"] = dataset;
  ordered_json ex;
  ex["out_of_scope_group"] = out_of_scope_group;
  ex["plan_not_covered"] = plan_not_covered;
  ordered_json up;
  for (const auto& id : prompt_order) {
    const auto it = unparseable.find(id);
    up[id] = it == unparseable.end() ? 0 : it->second;
  }
  ex["unparseable"] = std::move(up);
  j["exclusions"] = std::move(ex);
  j["prompt_order"] = prompt_order;
  j["threshold"] =
      ordered_json{{"num", threshold.num()}, {"den", threshold.den()}};
  return j;
}

TrailMeta TrailMeta::from_json(const ordered_json& j) {
  TrailMeta m;
  m.config = j.at("config");
  m.dataset = j.at("dataset");
  const auto& ex = j.at("exclusions");
  m.out_of_scope_group = ex.at("out_of_scope_group").get<std::int64_t>();
  m.plan_not_covered = ex.at("plan_not_covered").get<std::int64_t>();
  for (const auto& [k, v] : ex.at("unparseable").items())
    m.unparseable[k] = v.get<std::int64_t>();
  m.prompt_order = j.at("prompt_order").get<std::vector<std::string>>();
  m.threshold = Rational(j.at("threshold").at("num").get<std::int64_t>(),
                         j.at("threshold").at("den").get<std::int64_t>());
  return m;
}

PromptResult aggregate_prompt(
    const std::string& prompt_id, std::span<const ConsistencyAudit> audits,
    std::int64_t unparseable,
    const std::optional<Rational>& override_threshold) {
  PromptResult result;
  result.prompt_id = prompt_id;
  result.unparseable = unparseable;

  std::vector<Verdict> original, adjusted;
  std::vector<int> labels, groups;
  for (const auto& a : audits) {
    if (!a.group) continue;  // cannot enter two-group metrics
    const Verdict adj = override_threshold
                            ? adjust(a.original, a.cr, *override_threshold)
                            : a.adjusted;
    original.push_back(a.original);
    adjusted.push_back(adj);
    labels.push_back(a.label);
    groups.push_back(*a.group);
    if (!(adj == a.original)) ++result.flips;
  }
  result.audited = static_cast<std::int64_t>(original.size());

  auto [g0o, g1o] = group_metrics(original, labels, groups);
  auto [g0a, g1a] = group_metrics(adjusted, labels, groups);
  result.g0_original = g0o;
  result.g1_original = g1o;
  result.g0_adjusted = g0a;
  result.g1_adjusted = g1a;
  result.original = fairness_gaps(g0o, g1o);
  result.adjusted = fairness_gaps(g0a, g1a);
  result.overall_original = overall_performance(original, labels);
  result.overall_adjusted = overall_performance(adjusted, labels);
  return result;
}

FairnessReport report_from_audits(const TrailMeta& meta,
                                  const std::vector<ConsistencyAudit>& audits) {
  std::map<std::string, std::vector<ConsistencyAudit>> by_prompt;
  std::vector<std::string> order = meta.prompt_order;
  for (const auto& a : audits) {
    if (by_prompt.find(a.prompt_id) == by_prompt.end() &&
        std::find(order.begin(), order.end(), a.prompt_id) == order.end())
      order.push_back(a.prompt_id);
    by_prompt[a.prompt_id].push_back(a);
  }

  FairnessReport report;
  report.meta = meta;
  for (const auto& id : order) {
    const auto it = by_prompt.find(id);
    const std::vector<ConsistencyAudit> empty;
    const auto& prompt_audits = it == by_prompt.end() ? empty : it->second;
    const auto up = meta.unparseable.find(id);
    report.prompts.push_back(aggregate_prompt(
        id, prompt_audits, up == meta.unparseable.end() ? 0 : up->second));
  }

  report.average_original = average_gaps(report.prompts, false);
  report.average_adjusted = average_gaps(report.prompts, true);
  report.avg_accuracy_original =
      average_of(report.prompts, [](const PromptResult& p)
                                     -> const std::optional<Rational>& {
        return p.overall_original.accuracy;
      });
  report.avg_precision_original =
      average_of(report.prompts, [](const PromptResult& p)
                                     -> const std::optional<Rational>& {
        return p.overall_original.precision;
      });
  report.avg_accuracy_adjusted =
      average_of(report.prompts, [](const PromptResult& p)
                                     -> const std::optional<Rational>& {
        return p.overall_adjusted.accuracy;
      });
  report.avg_precision_adjusted =
      average_of(report.prompts, [](const PromptResult& p)
                                     -> const std::optional<Rational>& {
        return p.overall_adjusted.precision;
      });
  return report;
}

ordered_json FairnessReport::to_json() const {
  ordered_json j;
  j["tool"] = tool;
  j["config"] = meta.config;
  j["dataset"] = meta.dataset;
  ordered_json ex;
  ex["out_of_scope_group"] = meta.out_of_scope_group;
  ex["plan_not_covered"] = meta.plan_not_covered;
  std::int64_t unparseable_total = 0;
  for (const auto& [_, n] : meta.unparseable) unparseable_total += n;
  ex["unparseable_total"] = unparseable_total;
  j["exclusions"] = std::move(ex);

  ordered_json prompt_list = ordered_json::array();
  for (const auto& p : prompts) {
    ordered_json pj;
    pj["id"] = p.prompt_id;
    pj["audited"] = p.audited;
    pj["unparseable"] = p.unparseable;
    pj["flips"] = p.flips;
    ordered_json groups;
    groups["original"] =
        ordered_json{{"group0", group_metrics_json(p.g0_original)},
                     {"group1", group_metrics_json(p.g1_original)}};
    groups["adjusted"] =
        ordered_json{{"group0", group_metrics_json(p.g0_adjusted)},
                     {"group1", group_metrics_json(p.g1_adjusted)}};
    pj["groups"] = std::move(groups);
    ordered_json gaps;
    gaps["original"] = gaps_json(p.original);
    gaps["adjusted"] = gaps_json(p.adjusted);
    pj["gaps"] = std::move(gaps);
    ordered_json overall;
    overall["original"] = overall_json(p.overall_original);
    overall["adjusted"] = overall_json(p.overall_adjusted);
    pj["overall"] = std::move(overall);
    prompt_list.push_back(std::move(pj));
  }
  j["prompts"] = std::move(prompt_list);

  ordered_json avg;
  avg["original"] = average_gaps_json(average_original);
  avg["adjusted"] = average_gaps_json(average_adjusted);
  ordered_json avg_overall;
  avg_overall["original"] =
      ordered_json{{"accuracy", gap_average_json(avg_accuracy_original)},
                   {"precision", gap_average_json(avg_precision_original)}};
  avg_overall["adjusted"] =
      ordered_json{{"accuracy", gap_average_json(avg_accuracy_adjusted)},
                   {"precision", gap_average_json(avg_precision_adjusted)}};
  avg["overall"] = std::move(avg_overall);
  j["average"] = std::move(avg);
  return j;
}

std::string FairnessReport::to_csv() const {
  std::ostringstream out;
  out << "metric";
  for (const auto& p : prompts) out << ',' << p.prompt_id;
  out << '\n';

  auto row = [&](const std::string& name,
                 const std::function<std::string(const PromptResult&)>& f) {
    out << name;
    for (const auto& p : prompts) out << ',' << f(p);
    out << '\n';
  };

  row("d_tpr_o", [](const PromptResult& p) { return cell(p.original.d_tpr); });
  row("d_tpr_a", [](const PromptResult& p) { return cell(p.adjusted.d_tpr); });
  row("d_fpr_o", [](const PromptResult& p) { return cell(p.original.d_fpr); });
  row("d_fpr_a", [](const PromptResult& p) { return cell(p.adjusted.d_fpr); });
  row("d_pre_o",
      [](const PromptResult& p) { return cell(p.original.d_precision); });
  row("d_pre_a",
      [](const PromptResult& p) { return cell(p.adjusted.d_precision); });
  row("d_rec_o",
      [](const PromptResult& p) { return cell(p.original.d_recall); });
  row("d_rec_a",
      [](const PromptResult& p) { return cell(p.adjusted.d_recall); });
  row("d_acc_o",
      [](const PromptResult& p) { return cell(p.original.d_accuracy); });
  row("d_acc_a",
      [](const PromptResult& p) { return cell(p.adjusted.d_accuracy); });
  row("d_sp_o", [](const PromptResult& p) { return cell(p.original.d_sp); });
  row("d_sp_a", [](const PromptResult& p) { return cell(p.adjusted.d_sp); });
  row("flips", [](const PromptResult& p) { return std::to_string(p.flips); });
  row("accuracy_o", [](const PromptResult& p) {
    return cell(p.overall_original.accuracy);
  });
  row("accuracy_a", [](const PromptResult& p) {
    return cell(p.overall_adjusted.accuracy);
  });
  row("precision_o", [](const PromptResult& p) {
    return cell(p.overall_original.precision);
  });
  row("precision_a", [](const PromptResult& p) {
    return cell(p.overall_adjusted.precision);
  });
  row("audited",
      [](const PromptResult& p) { return std::to_string(p.audited); });
  row("unparseable",
      [](const PromptResult& p) { return std::to_string(p.unparseable); });
  return out.str();
}

void write_atomic(const std::filesystem::path& path,
                  const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_audit_trail(const std::filesystem::path& dir, const TrailMeta& meta,
                       const std::vector<ConsistencyAudit>& audits) {
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const auto& a : audits) {
    lines += a.to_json().dump();
    lines += '\n';
  }
  write_atomic(dir / "audits.jsonl", lines);
  write_atomic(dir / "meta.json", meta.to_json().dump(2) + "\n");
}

std::vector<ConsistencyAudit> read_audits(const std::filesystem::path& dir) {
  const std::filesystem::path file = dir / "audits.jsonl";
  std::ifstream in(file);
  if (!in) throw DataError("cannot open audit trail: " + file.string());
  std::vector<ConsistencyAudit> audits;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      audits.push_back(ConsistencyAudit::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("audit trail " + file.string() + " line " +
                      std::to_string(lineno) + ": " + e.what());
    }
  }
  return audits;
}

TrailMeta read_trail_meta(const std::filesystem::path& dir) {
  const std::filesystem::path file = dir / "meta.json";
  std::ifstream in(file);
  if (!in) throw DataError("cannot open audit trail meta: " + file.string());
  ordered_json j;  // key order is part of the byte-identical contract
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("audit trail meta " + file.string() + ": " + e.what());
  }
  return TrailMeta::from_json(j);
}

std::set<ReportFormat> parse_formats(const std::string& list) {
  std::set<ReportFormat> formats;
  std::string token;
  std::istringstream in(list);
  while (std::getline(in, token, ',')) {
    while (!token.empty() && token.front() == ' ') token.erase(0, 1);
    while (!token.empty() && token.back() == ' ') token.pop_back();
    if (token == "json") {
      formats.insert(ReportFormat::Json);
    } else if (token == "table") {
      formats.insert(ReportFormat::Table);
    } else if (token == "chart") {
      formats.insert(ReportFormat::Chart);
    } else if (!token.empty()) {
      throw ConfigError("unknown report format: " + token);
    }
  }
  if (formats.empty()) throw ConfigError("no report formats selected");
  return formats;
}

namespace {

std::vector<std::optional<int>> gap_hundredths(const FairnessGaps& g) {
  auto h = [](const std::optional<Rational>& r) -> std::optional<int> {
    if (!r) return std::nullopt;
    return hundredths(*r);
  };
  return {h(g.d_tpr), h(g.d_fpr),      h(g.d_precision),
          h(g.d_recall), h(g.d_accuracy), h(g.d_sp)};
}

std::vector<std::optional<int>> gap_hundredths(const AverageGaps& g) {
  auto h = [](const GapAverage& a) -> std::optional<int> {
    if (!a.value) return std::nullopt;
    return hundredths(*a.value);
  };
  return {h(g.d_tpr), h(g.d_fpr),      h(g.d_precision),
          h(g.d_recall), h(g.d_accuracy), h(g.d_sp)};
}

const std::vector<std::string> kGapNames = {"d_tpr", "d_fpr", "d_pre",
                                            "d_rec", "d_acc", "d_sp"};

}  // namespace

std::vector<std::filesystem::path> emit_report(
    const FairnessReport& report, const std::set<ReportFormat>& formats,
    const std::filesystem::path& out_dir) {
  if (report.prompts.empty())
    throw DataError("empty prompt result set: nothing to report");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  if (formats.contains(ReportFormat::Json)) {
    const auto path = out_dir / "report.json";
    write_atomic(path, report.to_json().dump(2) + "\n");
    written.push_back(path);
  }
  if (formats.contains(ReportFormat::Table)) {
    const auto path = out_dir / "report.csv";
    write_atomic(path, report.to_csv());
    written.push_back(path);
  }
  if (formats.contains(ReportFormat::Chart)) {
    for (const auto& p : report.prompts) {
      const auto path = out_dir / "charts" / ("gaps_" + p.prompt_id + ".svg");
      write_atomic(path,
                   render_gap_chart_svg("Fairness gaps, prompt " + p.prompt_id,
                                        kGapNames, gap_hundredths(p.original),
                                        gap_hundredths(p.adjusted)));
      written.push_back(path);
    }
    const auto path = out_dir / "charts" / "gaps_average.svg";
    write_atomic(path, render_gap_chart_svg(
                           "Fairness gaps, average across prompts", kGapNames,
                           gap_hundredths(report.average_original),
                           gap_hundredths(report.average_adjusted)));
    written.push_back(path);
  }
  return written;
}

}  // namespace fairaudit
