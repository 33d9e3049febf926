#include "cli/commands.h"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spiro/cohort.h"
#include "spiro/csv.h"
#include "spiro/error.h"
#include "spiro/fairness_audit.h"
#include "spiro/outcome_eval.h"
#include "spiro/scoring.h"
#include "spiro/sdoh_calibration.h"
#include "spiro/stats.h"
#include "spiro/synth.h"
#include "spiro/table_set.h"

#ifndef SPIRO_VERSION
#define SPIRO_VERSION "unknown"
#endif

namespace spiro::cli {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kModule[] = "cli";
constexpr std::size_t kMaxListedRows = 20;

// Published exposure-based estimates of the SDoH share of the gap, shown
// next to phi_hat for comparison only.
const std::map<std::string, double>& ExternalEstimates() {
  static const std::map<std::string, double> estimates = {{"Black", 0.263},
                                                          {"Asian", 0.066}};
  return estimates;
}

Json ProvenanceJson(const RunConfig& c) {
  Json p;
  p["tool"] = "spiro";
  p["version"] = SPIRO_VERSION;
  p["command"] = c.command;
  p["config_hash"] = ConfigHash(c);
  p["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  return p;
}

void WriteCsvProvenance(std::ostream& os, const RunConfig& c) {
  if (c.canonical) return;
  os << "# tool=spiro\n"
     << "# version=" << SPIRO_VERSION << "\n"
     << "# command=" << c.command << "\n"
     << "# config_hash=" << ConfigHash(c) << "\n"
     << "# seed=" << (c.seed ? fmt::format("{}", *c.seed) : "") << "\n";
}

// Opens `path` (or falls back to `fallback`) and hands the stream to write.
template <typename Write>
void Emit(const std::filesystem::path& path, std::ostream& fallback,
          Write&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw ConfigError(kModule,
                      fmt::format("cannot write '{}'", path.string()));
  }
  write(file);
  if (!file) {
    throw ConfigError(kModule,
                      fmt::format("error writing '{}'", path.string()));
  }
}

void EmitJson(const RunConfig& c, std::ostream& out, Json results) {
  Json doc;
  if (!c.canonical) doc["provenance"] = ProvenanceJson(c);
  doc["results"] = std::move(results);
  Emit(c.out, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

std::string Num(double v) { return FormatDouble(v); }

template <typename T>
std::string Opt(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, double>) {
    return FormatDouble(*v);
  } else {
    return fmt::format("{}", *v);
  }
}

Json OptJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

// Ingests the cohort, reports row problems, and makes sure every
// participant carries a group label.
Cohort LoadCohort(const RunConfig& c, std::ostream& err) {
  const ColumnSchema schema =
      c.schema.empty() ? ColumnSchema{} : ColumnSchema::LoadFile(c.schema);
  IngestOptions options;
  options.adult_filter = c.adult_filter;
  IngestResult ingest = IngestFile(c.cohort, schema, options);
  for (std::size_t i = 0; i < ingest.rejected.size(); ++i) {
    if (i == kMaxListedRows) {
      err << fmt::format("warning: ... {} more rejected rows\n",
                         ingest.rejected.size() - kMaxListedRows);
      break;
    }
    const auto& d = ingest.rejected[i];
    err << fmt::format("warning: cohort row {} ({}) rejected: {}\n", d.row,
                       d.id, d.reason);
  }
  if (!ingest.excluded.empty()) {
    err << fmt::format("note: {} rows outside the adult age range excluded\n",
                       ingest.excluded.size());
  }
  if (ingest.participants.empty()) {
    throw DataError("cohort", fmt::format("no usable participants in '{}'",
                                          c.cohort.string()));
  }
  const bool all_grouped =
      std::all_of(ingest.participants.begin(), ingest.participants.end(),
                  [](const Participant& p) { return !p.group.empty(); });
  if (c.mapping.empty() && all_grouped) return std::move(ingest.participants);
  const GroupMapping mapping = c.mapping.empty()
                                   ? GroupMapping::NhanesDefault()
                                   : GroupMapping::LoadFile(c.mapping);
  return MapGroups(std::move(ingest.participants), mapping).participants;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : SplitCsvLine(text)) {
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

std::vector<Criterion> Criteria(const std::string& text) {
  if (text == "all") {
    return {Criterion::kIndependence, Criterion::kSeparation,
            Criterion::kSufficiency};
  }
  std::vector<Criterion> out;
  for (const auto& item : SplitList(text)) out.push_back(*ParseCriterion(item));
  return out;
}

Json ReportJson(const AuditReport& r) {
  Json j;
  j["score"] = r.score_name;
  j["criterion"] = ToString(r.criterion);
  j["statistic_name"] = r.statistic_name;
  j["statistic"] = r.statistic;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["tolerance"] = r.tolerance;
  j["verdict"] = ToString(r.verdict);
  j["degenerate"] = r.degenerate;
  j["n_per_group"] = r.n_per_group;
  j["details"] = r.details;
  j["notes"] = r.notes;
  return j;
}

// Cutoff for the "abnormal" classification: the LLN for z-scores, 80% for
// percent predicted, and the pooled 5th percentile for raw volumes.
ThresholdRule DefaultThreshold(ScoreMetric metric,
                               const std::vector<ScoreRecord>& records) {
  if (metric == ScoreMetric::kZScore) return {kLlnZ, true};
  if (metric == ScoreMetric::kPercentPredicted) return {80.0, true};
  std::vector<double> values;
  for (const auto& r : records) values.push_back(r.score);
  return {values.empty() ? 0.0 : Quantile(values, 0.05), true};
}

}  // namespace

void RunScore(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto defs = ParseScoreList(c.ResolvedScores());
  const TableSet tables = TableSet::LoadDirectory(c.tables);
  const Cohort cohort = LoadCohort(c, err);

  struct Row {
    const Participant* p;
    const ScoreDefinition* def;
    const CoefficientTable* table;
    std::optional<ReferenceOutput> ref;
    std::optional<double> score;
    std::string status;
  };
  std::vector<Row> rows;
  for (const auto& p : cohort) {
    for (const auto& def : defs) {
      Row row{&p, &def, ReferenceTable(def, p, tables), std::nullopt,
              ComputeScore(def, p, tables), "ok"};
      if (def.metric != ScoreMetric::kRaw) {
        if (!row.table) {
          row.status = "no_table";
        } else if (!row.table->Covers(p.age)) {
          row.status = "age_outside_table";
        } else {
          row.ref = Evaluate(*row.table, p.Demographics(), p.fev1);
        }
      }
      if (!p.fev1) row.status = "no_fev1";
      rows.push_back(std::move(row));
    }
  }

  if (c.ResolvedFormat() == OutputFormat::kJson) {
    Json results = Json::array();
    for (const auto& r : rows) {
      Json j;
      j["id"] = r.p->id;
      j["group"] = r.p->group;
      j["sex"] = ToString(r.p->sex);
      j["age"] = r.p->age;
      j["height"] = r.p->height;
      j["fev1"] = OptJson(r.p->fev1);
      j["score"] = r.def->name;
      j["table_id"] = r.table ? Json(r.table->table_id()) : Json(nullptr);
      j["median"] = r.ref ? Json(r.ref->median) : Json(nullptr);
      j["l"] = r.ref ? Json(r.ref->l_param) : Json(nullptr);
      j["s"] = r.ref ? Json(r.ref->s_param) : Json(nullptr);
      j["lln"] = r.ref ? Json(r.ref->lln) : Json(nullptr);
      j["value"] = OptJson(r.score);
      j["z"] = r.ref ? OptJson(r.ref->z_score) : Json(nullptr);
      j["pctpred"] = r.ref ? OptJson(r.ref->percent_predicted) : Json(nullptr);
      j["status"] = r.status;
      results.push_back(std::move(j));
    }
    EmitJson(c, out, std::move(results));
    return;
  }
  Emit(c.out, out, [&](std::ostream& os) {
    WriteCsvProvenance(os, c);
    WriteCsvRow(os, {"id", "group", "sex", "age", "height", "fev1", "score",
                     "table_id", "median", "l", "s", "lln", "value", "z",
                     "pctpred", "status"});
    for (const auto& r : rows) {
      const ReferenceOutput* ref = r.ref ? &*r.ref : nullptr;
      WriteCsvRow(os, {r.p->id, r.p->group, std::string(ToString(r.p->sex)),
                       Num(r.p->age), Num(r.p->height), Opt(r.p->fev1),
                       r.def->name, r.table ? r.table->table_id() : "",
                       ref ? Num(ref->median) : "", ref ? Num(ref->l_param) : "",
                       ref ? Num(ref->s_param) : "", ref ? Num(ref->lln) : "",
                       Opt(r.score), ref ? Opt(ref->z_score) : "",
                       ref ? Opt(ref->percent_predicted) : "", r.status});
    }
  });
}

void RunEstimatePhi(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TableSet tables = TableSet::LoadDirectory(c.tables);
  for (const auto& label : {c.privileged, c.pooled}) {
    if (!tables.HasGroup(label)) {
      throw DataError("table_set",
                      fmt::format("no table for group '{}' in '{}'", label,
                                  c.tables.string()));
    }
  }
  const Cohort cohort = LoadCohort(c, err);

  std::vector<std::string> groups = c.groups;
  if (groups.empty()) {
    std::set<std::string> present;
    for (const auto& p : cohort) present.insert(p.group);
    for (const auto& g : present) {
      if (g != c.privileged && tables.HasGroup(g)) groups.push_back(g);
    }
    if (groups.empty()) {
      throw DataError(kModule, "cohort has no group besides the privileged one");
    }
  }

  PhiOptions options;
  options.metric =
      c.metric == "pctpred" ? PhiMetric::kPercentPredicted : PhiMetric::kZScore;
  options.min_participants = c.min_n;
  options.threads = c.threads;

  struct Result {
    PhiEstimate estimate;
    GapSummary gap;
  };
  std::vector<Result> results;
  for (const auto& g : groups) {
    PhiEstimate est =
        EstimatePhi(cohort, tables, g, c.privileged, c.pooled, options);
    if (est.n_skipped > 0) {
      err << fmt::format("note: group '{}': {} participants skipped (no FEV1 "
                         "or age outside a table)\n",
                         g, est.n_skipped);
    }
    if (est.boundary != BoundaryFlag::kNone) {
      err << fmt::format("warning: group '{}': phi_hat clipped at the {} "
                         "boundary\n",
                         g, ToString(est.boundary));
    }
    results.push_back({std::move(est),
                       SummarizeGap(cohort, g, c.privileged, c.weighted)});
  }

  if (!c.curve_out.empty()) {
    Emit(c.curve_out, out, [&](std::ostream& os) {
      WriteCsvProvenance(os, c);
      WriteCsvRow(os, {"group", "phi", "objective"});
      for (const auto& r : results) {
        for (const auto& [phi, obj] : r.estimate.objective_curve) {
          WriteCsvRow(os, {r.estimate.group, Num(phi), Num(obj)});
        }
      }
    });
  }

  auto external = [](const std::string& group) -> std::optional<double> {
    const auto it = ExternalEstimates().find(group);
    if (it == ExternalEstimates().end()) return std::nullopt;
    return it->second;
  };

  if (c.ResolvedFormat() == OutputFormat::kJson) {
    Json list = Json::array();
    for (const auto& r : results) {
      const PhiEstimate& e = r.estimate;
      Json j;
      j["group"] = e.group;
      j["privileged"] = c.privileged;
      j["pooled"] = c.pooled;
      j["metric"] = ToString(e.metric);
      j["phi_hat"] = e.phi_hat;
      j["objective_at_min"] = e.objective_at_min;
      j["boundary"] = ToString(e.boundary);
      j["n_used"] = e.n_used;
      j["n_skipped"] = e.n_skipped;
      Json gap;
      gap["mean_gap_l"] = r.gap.mean_gap;
      gap["n_group"] = r.gap.n_group;
      gap["n_privileged"] = r.gap.n_privileged;
      gap["weighted"] = c.weighted;
      gap["mean_deficit_diff_l"] = OptJson(r.gap.mean_deficit_diff);
      gap["phi_true"] = OptJson(r.gap.phi_true);
      j["gap"] = std::move(gap);
      j["external_estimate"] = OptJson(external(e.group));
      Json curve = Json::array();
      for (const auto& [phi, obj] : e.objective_curve) {
        curve.push_back(Json::array({phi, obj}));
      }
      j["objective_curve"] = std::move(curve);
      list.push_back(std::move(j));
    }
    EmitJson(c, out, std::move(list));
    return;
  }
  Emit(c.out, out, [&](std::ostream& os) {
    WriteCsvProvenance(os, c);
    WriteCsvRow(os, {"group", "metric", "n_used", "mean_gap_l", "phi_hat",
                     "phi_hat_pct", "objective_at_min", "boundary", "phi_true",
                     "external_estimate"});
    for (const auto& r : results) {
      const PhiEstimate& e = r.estimate;
      WriteCsvRow(os, {e.group, std::string(ToString(e.metric)),
                       fmt::format("{}", e.n_used), Num(r.gap.mean_gap),
                       Num(e.phi_hat), fmt::format("{:.1f}", 100.0 * e.phi_hat),
                       Num(e.objective_at_min),
                       std::string(ToString(e.boundary)), Opt(r.gap.phi_true),
                       Opt(external(e.group))});
    }
  });
}

void RunAudit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto defs = ParseScoreList(c.ResolvedScores());
  const auto criteria = Criteria(c.criteria);
  std::optional<OutcomeSelector> outcome;
  if (!c.outcomes.empty()) outcome = OutcomeSelector::Parse(c.outcomes);
  const TableSet tables = TableSet::LoadDirectory(c.tables);
  const Cohort cohort = LoadCohort(c, err);

  std::vector<ScoreSeries> series;
  for (const auto& def : defs) {
    ScoreSeries s;
    s.name = def.name;
    for (const auto& p : cohort) {
      if (p.group != c.group_a && p.group != c.group_b) continue;
      const auto score = ComputeScore(def, p, tables);
      if (!score) continue;
      ScoreRecord r;
      r.score = *score;
      r.group = p.group;
      if (outcome) {
        if (const auto y = outcome->Resolve(p)) r.outcome = *y ? 1.0 : 0.0;
      }
      s.records.push_back(std::move(r));
    }
    s.threshold = DefaultThreshold(def.metric, s.records);
    series.push_back(std::move(s));
  }

  PanelOptions options;
  options.group_a = c.group_a;
  options.group_b = c.group_b;
  options.independence_tolerance = c.independence_tolerance;
  options.separation_tolerance = c.separation_tolerance;
  options.bootstrap.replicates = c.ResolvedReplicates();
  options.bootstrap.seed = *c.seed;
  options.bootstrap.threads = c.threads;
  options.criteria = criteria;
  const auto reports = ImpossibilityPanel(series, options);

  if (!c.rates_out.empty()) {
    Emit(c.rates_out, out, [&](std::ostream& os) {
      WriteCsvProvenance(os, c);
      WriteCsvRow(os, {"score", "group", "threshold", "fpr", "fnr"});
      for (const auto& r : reports) {
        if (r.criterion != Criterion::kSeparation) continue;
        const auto threshold = r.details.find("threshold");
        for (const auto& [group, n] : r.n_per_group) {
          auto rate = [&](const std::string& prefix) {
            const auto it = r.details.find(prefix + group);
            return it == r.details.end() ? std::string() : Num(it->second);
          };
          WriteCsvRow(os, {r.score_name, group,
                           threshold == r.details.end()
                               ? std::string()
                               : Num(threshold->second),
                           rate("fpr_"), rate("fnr_")});
        }
      }
    });
  }

  const std::string panel = RenderPanel(reports);
  if (!c.out.empty()) out << panel;

  if (c.ResolvedFormat() == OutputFormat::kJson) {
    Json list = Json::array();
    for (const auto& r : reports) list.push_back(ReportJson(r));
    Json results;
    results["group_a"] = c.group_a;
    results["group_b"] = c.group_b;
    results["outcome"] = outcome ? Json(outcome->label) : Json(nullptr);
    results["reports"] = std::move(list);
    results["panel"] = panel;
    EmitJson(c, out, std::move(results));
    return;
  }
  Emit(c.out, out, [&](std::ostream& os) {
    WriteCsvProvenance(os, c);
    WriteCsvRow(os, {"score", "criterion", "statistic_name", "statistic",
                     "ci_low", "ci_high", "tolerance", "verdict", "degenerate",
                     "n", "notes"});
    for (const auto& r : reports) {
      std::size_t n = 0;
      for (const auto& [g, k] : r.n_per_group) n += k;
      std::string notes;
      for (const auto& note : r.notes) {
        notes += (notes.empty() ? "" : "; ") + note;
      }
      WriteCsvRow(os, {r.score_name, std::string(ToString(r.criterion)),
                       r.statistic_name, Num(r.statistic), Num(r.ci_low),
                       Num(r.ci_high), Num(r.tolerance),
                       std::string(ToString(r.verdict)),
                       r.degenerate ? "1" : "0", fmt::format("{}", n), notes});
    }
  });
}

void RunEvaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto defs = ParseScoreList(c.ResolvedScores());
  const auto outcomes = ParseOutcomeList(c.outcomes);
  const TableSet tables = TableSet::LoadDirectory(c.tables);
  Cohort cohort = LoadCohort(c, err);

  AtRiskSummary at_risk;
  if (c.at_risk_filter) {
    cohort = FilterAtRisk(cohort, &at_risk);
    err << fmt::format("note: at-risk filter kept {} of {} participants\n",
                       at_risk.retained, at_risk.input);
  }

  EvalOptions options;
  options.bootstrap.replicates = c.ResolvedReplicates();
  options.bootstrap.seed = *c.seed;
  options.bootstrap.threads = c.threads;
  options.orientation = c.orientation == "higher" ? Orientation::kHigher
                        : c.orientation == "lower" ? Orientation::kLower
                                                   : Orientation::kAuto;
  const auto results = EvaluatePanel(cohort, tables, defs, outcomes, options);
  for (const auto& r : results) {
    if (!r.ok) {
      err << fmt::format("warning: {} x {}: {}\n", r.score_name,
                         r.outcome_name, r.error);
    } else if (options.orientation == Orientation::kAuto) {
      err << fmt::format("note: {} x {}: orientation {}\n", r.score_name,
                         r.outcome_name, ToString(r.orientation));
    }
  }

  if (c.ResolvedFormat() == OutputFormat::kJson) {
    Json doc;
    if (c.at_risk_filter) {
      Json a;
      a["input"] = at_risk.input;
      a["retained"] = at_risk.retained;
      a["inclusion_rate"] = at_risk.inclusion_rate;
      a["missing_smoker_ever"] = at_risk.missing_smoker_ever;
      a["missing_respiratory_dx"] = at_risk.missing_respiratory_dx;
      a["missing_symptoms"] = at_risk.missing_symptoms;
      doc["at_risk"] = std::move(a);
    } else {
      doc["at_risk"] = nullptr;
    }
    Json list = Json::array();
    for (const auto& r : results) {
      Json j;
      j["outcome"] = r.outcome_name;
      j["score"] = r.score_name;
      j["ok"] = r.ok;
      j["auc"] = r.ok ? Json(r.auc) : Json(nullptr);
      j["ci_low"] = r.ok ? Json(r.ci_low) : Json(nullptr);
      j["ci_high"] = r.ok ? Json(r.ci_high) : Json(nullptr);
      j["n_pos"] = r.n_pos;
      j["n_neg"] = r.n_neg;
      j["orientation"] = ToString(r.orientation);
      if (!r.ok) j["error"] = r.error;
      list.push_back(std::move(j));
    }
    doc["cells"] = std::move(list);
    EmitJson(c, out, std::move(doc));
    return;
  }

  // One row per outcome, one column block per score.
  Emit(c.out, out, [&](std::ostream& os) {
    WriteCsvProvenance(os, c);
    std::vector<std::string> header = {"outcome", "n_pos", "n_neg"};
    for (const auto& d : defs) {
      for (const char* suffix : {"auc", "ci_low", "ci_high", "orientation"}) {
        header.push_back(fmt::format("{}_{}", d.name, suffix));
      }
    }
    WriteCsvRow(os, header);
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
      std::vector<std::string> row = {outcomes[o].label};
      // Class counts can differ by score when a score is missing for some
      // participants; report the first score's counts.
      const EvalResult& first = results[o];
      row.push_back(fmt::format("{}", first.n_pos));
      row.push_back(fmt::format("{}", first.n_neg));
      for (std::size_t s = 0; s < defs.size(); ++s) {
        const EvalResult& r = results[s * outcomes.size() + o];
        if (r.ok) {
          row.insert(row.end(), {Num(r.auc), Num(r.ci_low), Num(r.ci_high),
                                 std::string(ToString(r.orientation))});
        } else {
          row.insert(row.end(), {"NA", "NA", "NA", ""});
        }
      }
      WriteCsvRow(os, row);
    }
  });
}

void RunSynth(const RunConfig& c, std::ostream& out, std::ostream& err) {
  SynthSpec spec = SynthSpec::LoadFile(c.spec);
  if (c.seed) spec.seed = *c.seed;
  TableSet tables;
  if (!c.tables.empty()) {
    tables = TableSet::LoadDirectory(c.tables);
  } else if (!spec.tables_dir.empty()) {
    if (!std::filesystem::is_directory(spec.tables_dir)) {
      throw ConfigError(kModule, fmt::format("spec tables: no such directory "
                                             "'{}'",
                                             spec.tables_dir.string()));
    }
    tables = TableSet::LoadDirectory(spec.tables_dir);
  } else {
    tables = MakeSyntheticTableSet();
  }
  SynthReport report;
  const Cohort cohort = Generate(spec, tables, &report, c.threads);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  err << fmt::format("note: generated {} participants ({} resampled draws)\n",
                     cohort.size(), report.resampled);

  RunConfig effective = c;
  effective.seed = spec.seed;
  Emit(c.out, out, [&](std::ostream& os) {
    WriteCsvProvenance(os, effective);
    WriteCohortCsv(os, cohort);
  });
}

void RunPoolTables(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TableSet tables = TableSet::LoadDirectory(c.tables);
  TableSet built;
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    if (c.blend) {
      const std::string& group = c.groups.front();
      const std::string& ls_from = c.ls_from.empty() ? c.privileged : c.ls_from;
      const auto* k = tables.Find(group, sex);
      const auto* p = tables.Find(c.privileged, sex);
      const auto* ls = tables.Find(ls_from, sex);
      if (!k && !p && !ls) continue;
      if (!k || !p || !ls) {
        throw DataError("table_set",
                        fmt::format("blend needs '{}', '{}' and '{}' tables "
                                    "for {}",
                                    group, c.privileged, ls_from,
                                    ToString(sex)));
      }
      built.Add(BlendMedianTable(*k, *p, *c.blend, *ls, c.label));
      continue;
    }
    std::vector<CoefficientTable> members;
    for (const auto& g : c.groups) {
      if (const auto* t = tables.Find(g, sex)) members.push_back(*t);
    }
    if (members.empty()) continue;
    if (members.size() != c.groups.size()) {
      throw DataError("table_set",
                      fmt::format("not every group has a {} table",
                                  ToString(sex)));
    }
    std::vector<double> weights = c.weights;
    if (weights.empty()) {
      weights.assign(members.size(), 1.0 / static_cast<double>(members.size()));
    }
    built.Add(BuildPooledTable(members, weights, c.label));
  }
  if (built.empty()) {
    throw DataError("table_set", "no tables matched the requested groups");
  }
  std::filesystem::create_directories(c.out);
  built.WriteDirectory(c.out);
  err << fmt::format("note: wrote {} tables to '{}'\n", built.size(),
                     c.out.string());

  if (c.ResolvedFormat() == OutputFormat::kJson) {
    Json doc;
    if (!c.canonical) doc["provenance"] = ProvenanceJson(c);
    Json list = Json::array();
    for (Sex sex : {Sex::kMale, Sex::kFemale}) {
      if (const auto* t = built.Find(c.label, sex)) {
        list.push_back({{"table_id", t->table_id()},
                        {"group", t->group()},
                        {"sex", ToString(sex)},
                        {"metadata", t->metadata()}});
      }
    }
    doc["results"] = std::move(list);
    out << doc.dump(2) << '\n';
    return;
  }
  WriteCsvProvenance(out, c);
  WriteCsvRow(out, {"table_id", "group", "sex"});
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    if (const auto* t = built.Find(c.label, sex)) {
      WriteCsvRow(out, {t->table_id(), t->group(), std::string(ToString(sex))});
    }
  }
}

}  // namespace spiro::cli
