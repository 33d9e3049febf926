#ifndef SPIRO_SCORING_H_
#define SPIRO_SCORING_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spiro/cohort.h"
#include "spiro/table_set.h"

namespace spiro {

enum class ScoreMetric { kZScore, kPercentPredicted, kRaw };

std::string_view ToString(ScoreMetric metric);

// Reference label meaning "the participant's own group table".
inline constexpr std::string_view kGroupSpecific = "specific";

// How to turn one participant's FEV1 into a score.
//   reference: kGroupSpecific, a table group label (e.g. "pooled", "naive"),
//              or empty for raw liters.
struct ScoreDefinition {
  std::string name;
  std::string reference;
  ScoreMetric metric = ScoreMetric::kZScore;

  // Accepts the aliases gli2012 (group-specific z), gliglobal (pooled z),
  // naive (naive z) and raw (FEV1 liters), or "<reference>[:z|pctpred]".
  static ScoreDefinition Parse(std::string_view text);
};

std::vector<ScoreDefinition> ParseScoreList(std::string_view csv);

// nullopt when FEV1 is missing, no table exists for the participant, or
// the age lies outside the table grid.
std::optional<double> ComputeScore(const ScoreDefinition& def,
                                   const Participant& p,
                                   const TableSet& tables);

// Table used by `def` for participant `p`, or nullptr for raw scores and
// missing tables.
const CoefficientTable* ReferenceTable(const ScoreDefinition& def,
                                       const Participant& p,
                                       const TableSet& tables);

// Outcome selector "name" or "name@horizon_years".
struct OutcomeSelector {
  std::string label;  // as written
  std::string name;
  std::optional<double> horizon_years;

  static OutcomeSelector Parse(std::string_view text);
  // nullopt when absent or censored before the horizon.
  std::optional<bool> Resolve(const Participant& p) const;
};

std::vector<OutcomeSelector> ParseOutcomeList(std::string_view csv);

}  // namespace spiro

#endif  // SPIRO_SCORING_H_
