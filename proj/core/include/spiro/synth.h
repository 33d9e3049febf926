#ifndef SPIRO_SYNTH_H_
#define SPIRO_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spiro/cohort.h"
#include "spiro/ref_engine.h"
#include "spiro/table_set.h"

namespace spiro {

// Synthetic cohorts under LF = LF* - D: ideal lung function LF* drawn from
// a reference table's LMS distribution, minus a non-negative per-group
// deficit D.

struct SynthGroup {
  std::string label;           // reference group label written to `group`
  std::string race_ethnicity;  // defaults to `label`
  std::size_t n = 0;
  double deficit_mean = 0.0;  // liters, >= 0
  double deficit_sd = 0.0;    // liters, >= 0
  // Table group LF* is drawn from; defaults to `label`. Sharing one ideal
  // group across all groups gives a common physiology.
  std::string ideal_group;
};

struct DemographicRanges {
  double min_age = 20.0;
  double max_age = 80.0;
  double male_fraction = 0.5;
  double height_mean_male = 176.0;
  double height_sd_male = 7.5;
  double height_mean_female = 162.0;
  double height_sd_female = 7.0;
  double min_height = 140.0;  // heights are redrawn until inside the range
  double max_height = 210.0;
};

enum class OutcomeModelKind { kLogisticLf, kLogisticAge, kNoise };

std::string_view ToString(OutcomeModelKind kind);

// Binary outcome with P(Y = 1) = logistic(intercept + slope * x), where x is
// the realized FEV1 (kLogisticLf), age (kLogisticAge), or 0 (kNoise).
struct OutcomeModel {
  std::string name;
  OutcomeModelKind kind = OutcomeModelKind::kNoise;
  double intercept = 0.0;
  double slope = 0.0;
};

struct FlagRates {
  double smoker_ever = 0.4;
  double respiratory_dx = 0.1;
  std::map<std::string, double> symptoms;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  std::vector<SynthGroup> groups;
  DemographicRanges demographics;
  std::vector<OutcomeModel> outcomes;
  FlagRates flags;
  std::filesystem::path tables_dir;  // optional; resolved by the caller

  // Throws ConfigError on any invariant violation (n == 0, negative sd or
  // mean, bad ranges, duplicate labels, probabilities outside [0, 1]).
  void Validate() const;

  // JSON document:
  //   {"seed": 7, "tables": "dir",
  //    "groups": [{"label": "Black", "n": 1000, "deficit_mean": 0.25,
  //                "deficit_sd": 0.1, "ideal_group": "White"}],
  //    "demographics": {"min_age": 20, ...},
  //    "outcomes": [{"name": "mortality", "model": "logistic_age",
  //                  "intercept": -7, "slope": 0.1}],
  //    "flags": {"smoker_ever": 0.4, "respiratory_dx": 0.1,
  //              "symptoms": {"dyspnea": 0.2}}}
  // A relative "tables" path is resolved against `base_dir`.
  static SynthSpec FromJsonText(std::string_view text,
                                const std::filesystem::path& base_dir = {});
  static SynthSpec LoadFile(const std::filesystem::path& path);
};

struct SynthReport {
  std::size_t resampled = 0;  // draws rejected because LF <= 0
  std::vector<std::string> warnings;
};

// Deterministic given spec.seed: participant i uses its own counter-based
// stream, so the output does not depend on `threads`. Throws ConfigError
// for an invalid spec or one whose deficit mean reaches the typical LF*,
// and DataError when an ideal table is missing or does not cover the age
// range. More than 10% resampling adds a warning.
Cohort Generate(const SynthSpec& spec, const TableSet& ideal_tables,
                SynthReport* report = nullptr, int threads = 1);

// Pointwise pooling on a shared age grid: median columns are weight-averaged
// (a weighted geometric mean of medians), L columns are weight-averaged (a
// weighted arithmetic mean of L), and S is the weighted arithmetic mean of
// the tables' S values, matched exactly at every knot through s_spline.
// When the tables' s_ln_height terms differ, S is matched at 170 cm.
// Requires one sex, identical age grids, non-negative weights summing to 1.
CoefficientTable BuildPooledTable(std::span<const CoefficientTable> tables,
                                  std::span<const double> weights,
                                  std::string group = "pooled",
                                  std::string table_id = "");

// Median M_k + phi (M_p - M_k) with L and S copied from `ls_source`.
// Representable exactly only when M_p / M_k is constant, i.e. the two tables
// share height and age terms and differ by a constant log-offset; throws
// DataError otherwise.
CoefficientTable BlendMedianTable(const CoefficientTable& group_table,
                                  const CoefficientTable& privileged_table,
                                  double phi,
                                  const CoefficientTable& ls_source,
                                  std::string group = "pooled",
                                  std::string table_id = "");

// Plausible adult FEV1 table on a one-year grid over ages 18 to 95 with the
// usual log-height/log-age form and an age-decline spline. `median_scale`
// multiplies the median at every point.
CoefficientTable MakeSyntheticTable(std::string group, Sex sex,
                                    double median_scale = 1.0,
                                    std::string table_id = "");

// Constant-median table (the naive reference) on the same grid.
CoefficientTable MakeNaiveTable(Sex sex, double median, double s = 0.13,
                                double l = 1.0, std::string table_id = "");

// The shipped synthetic table set: White, Black, Asian, Other, an
// equal-weight pooled table over those four, and naive, for both sexes.
TableSet MakeSyntheticTableSet();

}  // namespace spiro

#endif  // SPIRO_SYNTH_H_
