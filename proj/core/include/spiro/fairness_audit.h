#ifndef SPIRO_FAIRNESS_AUDIT_H_
#define SPIRO_FAIRNESS_AUDIT_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spiro {

// One participant under one score definition: score S, group A, outcome Y.
struct ScoreRecord {
  double score = 0.0;
  std::string group;
  std::optional<double> outcome;    // 0/1 for separation and sufficiency
  std::optional<bool> below_lln;    // precomputed classification, optional
};

enum class Criterion { kIndependence, kSeparation, kSufficiency };
enum class Verdict { kConsistent, kViolated, kUndetermined };

std::string_view ToString(Criterion criterion);
std::string_view ToString(Verdict verdict);
std::optional<Criterion> ParseCriterion(std::string_view text);

struct AuditReport {
  Criterion criterion = Criterion::kIndependence;
  std::string score_name;
  std::string statistic_name;
  double statistic = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::kUndetermined;
  bool degenerate = false;
  std::map<std::string, std::size_t> n_per_group;
  std::map<std::string, double> details;
  std::vector<std::string> notes;
};

struct BootstrapOptions {
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  double coverage = 0.95;
};

inline constexpr double kDefaultIndependenceTolerance = 0.02;
inline constexpr double kDefaultSeparationTolerance = 0.05;
inline constexpr std::size_t kMinRecordsPerGroup = 30;

// S independent of A. Statistic: point-biserial correlation between the
// score and membership in `group_b` (vs `group_a`); also reports the
// standardized mean difference. Consistent iff |correlation| <= tolerance.
// Throws DataError when either group has fewer than 30 records.
AuditReport IndependenceCheck(std::span<const ScoreRecord> records,
                              std::string_view group_a,
                              std::string_view group_b,
                              double tolerance = kDefaultIndependenceTolerance,
                              const BootstrapOptions& bootstrap = {},
                              std::string score_name = "score");

// A record is classified positive (abnormal) when its score falls below
// `cutoff` (or above it, with positive_below = false).
struct ThresholdRule {
  double cutoff = 0.0;
  bool positive_below = true;
  bool Classify(double score) const {
    return positive_below ? score < cutoff : score > cutoff;
  }
};

// S independent of A given Y, as error-rate parity at a threshold: per-group
// false-positive and false-negative rates; statistic is the largest pairwise
// gap in either rate. Records' `below_lln`, when set, overrides the rule.
// Groups lacking an outcome class drop out of the comparisons that need it.
AuditReport SeparationCheck(std::span<const ScoreRecord> records,
                            const ThresholdRule& rule,
                            double tolerance = kDefaultSeparationTolerance,
                            const BootstrapOptions& bootstrap = {},
                            std::string score_name = "score");

// Y independent of A given S: logistic regression of the outcome on the
// score plus group indicators (reference = first group encountered).
// Statistic is the group coefficient of largest magnitude; consistent iff
// every group coefficient's bootstrap CI covers 0. Also reports, as a
// nonparametric cross-check, the largest between-group outcome-rate gap
// within score deciles. Non-convergence or separation yields kUndetermined.
AuditReport SufficiencyCheck(std::span<const ScoreRecord> records,
                             const BootstrapOptions& bootstrap = {},
                             std::string score_name = "score");

struct ScoreSeries {
  std::string name;
  std::vector<ScoreRecord> records;
  std::optional<ThresholdRule> threshold;  // needed for separation
};

struct PanelOptions {
  std::string group_a;
  std::string group_b;
  double independence_tolerance = kDefaultIndependenceTolerance;
  double separation_tolerance = kDefaultSeparationTolerance;
  BootstrapOptions bootstrap;
  std::vector<Criterion> criteria = {Criterion::kIndependence,
                                     Criterion::kSeparation,
                                     Criterion::kSufficiency};
};

// One report per (score series, criterion), series-major.
std::vector<AuditReport> ImpossibilityPanel(std::span<const ScoreSeries> series,
                                            const PanelOptions& options);

// Plain-text trade-off table: one row per score, one column per criterion.
std::string RenderPanel(std::span<const AuditReport> reports);

}  // namespace spiro

#endif  // SPIRO_FAIRNESS_AUDIT_H_
