#ifndef SPIRO_COHORT_H_
#define SPIRO_COHORT_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "spiro/ref_engine.h"

namespace spiro {

enum class OutcomeKind { kBinary, kTimeToEvent };

struct OutcomeRecord {
  OutcomeKind kind = OutcomeKind::kBinary;
  bool value = false;            // binary outcomes
  bool event = false;            // time-to-event outcomes
  double followup_years = 0.0;   // time-to-event outcomes, >= 0

  static OutcomeRecord Binary(bool value) {
    return {OutcomeKind::kBinary, value, false, 0.0};
  }
  static OutcomeRecord TimeToEvent(bool event, double followup_years);

  // Dichotomizes at `horizon_years`: an event within the horizon is
  // positive; follow-up reaching the horizon without an event is negative;
  // censoring before the horizon is nullopt (excluded). Binary outcomes
  // ignore the horizon.
  std::optional<bool> AtHorizon(std::optional<double> horizon_years) const;
};

// Ground truth attached to synthetic participants.
struct SynthProvenance {
  double lf_ideal = 0.0;  // liters, deficit-free lung function
  double deficit = 0.0;   // liters
};

struct Participant {
  std::string id;
  double age = 0.0;
  double height = 0.0;
  Sex sex = Sex::kMale;
  std::string race_ethnicity;
  std::string group;  // reference group label, empty until mapped
  std::optional<double> fev1;
  std::optional<double> fvc;
  std::optional<bool> smoker_ever;
  std::optional<bool> respiratory_dx;
  std::map<std::string, bool> symptoms;  // observed flags only
  std::map<std::string, OutcomeRecord> outcomes;
  std::optional<double> weight;  // survey weight, unused by default
  std::optional<SynthProvenance> provenance;

  DemographicInput Demographics() const { return {age, height, sex, group}; }
};

using Cohort = std::vector<Participant>;

// Maps semantic fields onto CSV column names. With `auto_prefixes`, columns
// named symptom_<x>, outcome_<x>, and event_<x> + followup_<x> are picked
// up automatically.
struct ColumnSchema {
  std::string id = "id";
  std::string age = "age";
  std::string height = "height";
  std::string sex = "sex";
  std::string race_ethnicity = "race_ethnicity";
  std::string group = "group";
  std::string fev1 = "fev1";
  std::string fvc = "fvc";
  std::string smoker_ever = "smoker_ever";
  std::string respiratory_dx = "respiratory_dx";
  std::string weight = "weight";
  std::string lf_ideal = "lf_ideal";
  std::string deficit = "deficit";
  std::map<std::string, std::string> symptoms;
  std::map<std::string, std::string> binary_outcomes;
  struct EventColumns {
    std::string event;
    std::string followup;
  };
  std::map<std::string, EventColumns> time_to_event;
  bool auto_prefixes = true;

  // JSON object: {"fields": {"age": "RIDAGEYR", ...}, "symptoms": {...},
  // "binary_outcomes": {...}, "time_to_event": {"mortality": {"event": ...,
  // "followup": ...}}, "auto_prefixes": true}.
  static ColumnSchema FromJsonText(std::string_view text);
  static ColumnSchema LoadFile(const std::filesystem::path& path);
};

struct IngestOptions {
  bool adult_filter = true;
  double min_age = 20.0;
  double max_age = 95.0;
};

struct RowDiagnostic {
  std::size_t row = 0;  // 1-based data row
  std::string id;
  std::string reason;
};

struct IngestResult {
  Cohort participants;
  std::vector<RowDiagnostic> rejected;  // failed a hard invariant
  std::vector<RowDiagnostic> excluded;  // valid but filtered (adult range)
  std::size_t rows_read = 0;
  // Per optional field, how many accepted rows lacked a value.
  std::map<std::string, std::size_t> missing_counts;
};

// Single-pass CSV ingestion. Unknown columns are ignored. Throws DataError
// when a mandatory column is absent; row-level problems are reported in the
// result, not thrown.
IngestResult Ingest(std::istream& in, const ColumnSchema& schema,
                    const IngestOptions& options = {});
IngestResult IngestFile(const std::filesystem::path& path,
                        const ColumnSchema& schema,
                        const IngestOptions& options = {});

struct GroupRule {
  std::string pattern;  // case-insensitive ECMAScript regex, full match
  std::string group;
};

class GroupMapping {
 public:
  GroupMapping(std::vector<GroupRule> rules,
               std::optional<std::string> default_group = std::nullopt);

  // NHANES RIDRETH3 categories (names or numeric codes): Mexican American,
  // other Hispanic and non-Hispanic White -> White; non-Hispanic Black ->
  // Black; non-Hispanic Asian -> Asian; other race incl. multiracial ->
  // Other. No default.
  static GroupMapping NhanesDefault();

  // JSON: {"rules": [{"pattern": "...", "group": "..."}], "default": "..."}
  static GroupMapping FromJsonText(std::string_view text);
  static GroupMapping LoadFile(const std::filesystem::path& path);

  // First matching rule, else the default, else nullopt.
  std::optional<std::string> Resolve(std::string_view category) const;

 private:
  std::vector<GroupRule> rules_;
  std::vector<std::regex> compiled_;
  std::optional<std::string> default_group_;
};

struct MappedCohort {
  Cohort participants;
  std::map<std::string, std::size_t> group_counts;
  std::map<std::string, std::size_t> category_counts;
};

// Tags every participant with its reference group. Throws DataError listing
// every category that resolves to no group.
MappedCohort MapGroups(Cohort cohort, const GroupMapping& mapping);

struct AtRiskSummary {
  std::size_t input = 0;
  std::size_t retained = 0;
  double inclusion_rate = 0.0;
  // Participants lacking each flag (treated as false).
  std::size_t missing_smoker_ever = 0;
  std::size_t missing_respiratory_dx = 0;
  std::size_t missing_symptoms = 0;
};

// smoker_ever OR respiratory_dx OR any symptom flag; missing counts as false.
bool IsAtRisk(const Participant& p);

Cohort FilterAtRisk(const Cohort& cohort, AtRiskSummary* summary = nullptr);

// Writes the standard cohort CSV (the format Ingest reads with the default
// schema). Column set is the union over participants.
void WriteCohortCsv(std::ostream& out, const Cohort& cohort);

}  // namespace spiro

#endif  // SPIRO_COHORT_H_
