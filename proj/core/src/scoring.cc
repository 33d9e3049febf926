#include "spiro/scoring.h"

#include <fmt/format.h>

#include "spiro/csv.h"
#include "spiro/error.h"

namespace spiro {
namespace {

constexpr char kModule[] = "scoring";

std::vector<std::string> SplitList(std::string_view csv) {
  std::vector<std::string> out;
  for (auto& item : SplitCsvLine(csv)) {
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

std::string_view ToString(ScoreMetric metric) {
  switch (metric) {
    case ScoreMetric::kZScore:
      return "z";
    case ScoreMetric::kPercentPredicted:
      return "pctpred";
    case ScoreMetric::kRaw:
      return "raw";
  }
  return "z";
}

ScoreDefinition ScoreDefinition::Parse(std::string_view text) {
  const std::string t(Trim(text));
  if (t.empty()) throw ConfigError(kModule, "empty score definition");
  if (t == "gli2012") return {t, std::string(kGroupSpecific), ScoreMetric::kZScore};
  if (t == "gliglobal") return {t, "pooled", ScoreMetric::kZScore};
  if (t == "naive") return {t, "naive", ScoreMetric::kZScore};
  if (t == "raw") return {t, "", ScoreMetric::kRaw};
  const auto colon = t.find(':');
  ScoreDefinition def{t, t.substr(0, colon), ScoreMetric::kZScore};
  if (colon != std::string::npos) {
    const std::string metric = t.substr(colon + 1);
    if (metric == "z") {
      def.metric = ScoreMetric::kZScore;
    } else if (metric == "pctpred") {
      def.metric = ScoreMetric::kPercentPredicted;
    } else {
      throw ConfigError(kModule,
                        fmt::format("unknown score metric '{}' in '{}'", metric, t));
    }
  }
  if (def.reference.empty()) {
    throw ConfigError(kModule, fmt::format("invalid score definition '{}'", t));
  }
  return def;
}

std::vector<ScoreDefinition> ParseScoreList(std::string_view csv) {
  std::vector<ScoreDefinition> out;
  for (const auto& item : SplitList(csv)) out.push_back(ScoreDefinition::Parse(item));
  if (out.empty()) throw ConfigError(kModule, "no score definitions given");
  return out;
}

const CoefficientTable* ReferenceTable(const ScoreDefinition& def,
                                       const Participant& p,
                                       const TableSet& tables) {
  if (def.metric == ScoreMetric::kRaw) return nullptr;
  const std::string& group =
      def.reference == kGroupSpecific ? p.group : def.reference;
  return tables.Find(group, p.sex);
}

std::optional<double> ComputeScore(const ScoreDefinition& def,
                                   const Participant& p,
                                   const TableSet& tables) {
  if (!p.fev1) return std::nullopt;
  if (def.metric == ScoreMetric::kRaw) return *p.fev1;
  const CoefficientTable* table = ReferenceTable(def, p, tables);
  if (!table || !table->Covers(p.age)) return std::nullopt;
  const LmsParams lms = table->Predict(p.age, p.height);
  if (def.metric == ScoreMetric::kPercentPredicted) {
    return PercentPredicted(*p.fev1, lms.median);
  }
  return ZScore(*p.fev1, lms);
}

OutcomeSelector OutcomeSelector::Parse(std::string_view text) {
  OutcomeSelector sel;
  sel.label = std::string(Trim(text));
  const auto at = sel.label.find('@');
  sel.name = sel.label.substr(0, at);
  if (sel.name.empty()) {
    throw ConfigError(kModule, fmt::format("invalid outcome '{}'", sel.label));
  }
  if (at != std::string::npos) {
    const auto horizon = ParseDouble(sel.label.substr(at + 1));
    if (!horizon || *horizon <= 0.0) {
      throw ConfigError(kModule,
                        fmt::format("invalid outcome horizon in '{}'", sel.label));
    }
    sel.horizon_years = *horizon;
  }
  return sel;
}

std::optional<bool> OutcomeSelector::Resolve(const Participant& p) const {
  auto it = p.outcomes.find(name);
  if (it == p.outcomes.end()) return std::nullopt;
  return it->second.AtHorizon(horizon_years);
}

std::vector<OutcomeSelector> ParseOutcomeList(std::string_view csv) {
  std::vector<OutcomeSelector> out;
  for (const auto& item : SplitList(csv)) out.push_back(OutcomeSelector::Parse(item));
  return out;
}

}  // namespace spiro
