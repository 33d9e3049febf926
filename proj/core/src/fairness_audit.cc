#include "spiro/fairness_audit.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "spiro/error.h"
#include "spiro/logistic.h"
#include "spiro/parallel.h"
#include "spiro/rng.h"
#include "spiro/stats.h"

namespace spiro {
namespace {

constexpr char kModule[] = "fairness_audit";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMinDecileCell = 10;

// Bootstrap stream tags, one per criterion, so the three checks never share
// resamples even under the same seed.
enum : std::uint64_t { kTagIndependence = 1, kTagSeparation, kTagSufficiency };

// Record indices grouped by group label in order of first appearance. Using
// appearance order rather than sorted labels keeps resampling invariant to
// relabeling the groups.
struct Strata {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> members;

  std::size_t IndexOf(const std::string& label) const {
    return static_cast<std::size_t>(
        std::find(labels.begin(), labels.end(), label) - labels.begin());
  }
};

template <typename Keep>
Strata Stratify(std::span<const ScoreRecord> records, Keep&& keep) {
  Strata s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!keep(records[i])) continue;
    const std::size_t g = s.IndexOf(records[i].group);
    if (g == s.labels.size()) {
      s.labels.push_back(records[i].group);
      s.members.emplace_back();
    }
    s.members[g].push_back(i);
  }
  return s;
}

std::map<std::string, std::size_t> CountPerGroup(const Strata& s) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t g = 0; g < s.labels.size(); ++g) {
    counts[s.labels[g]] = s.members[g].size();
  }
  return counts;
}

// Stratified resampling: each replicate redraws every stratum with
// replacement at its original size. `stat` maps a resample (a list of record
// indices) to a vector of statistics, or an empty vector on failure.
template <typename Stat>
std::vector<std::vector<double>> Bootstrap(const Strata& strata,
                                           const BootstrapOptions& options,
                                           std::uint64_t tag, Stat&& stat) {
  std::vector<std::vector<double>> out(options.replicates);
  ParallelFor(options.replicates, options.threads, [&](std::size_t r) {
    CounterRng rng(StreamKey(options.seed, r, tag));
    std::vector<std::size_t> sample;
    for (const auto& members : strata.members) {
      for (std::size_t j = 0; j < members.size(); ++j) {
        sample.push_back(members[rng.Index(members.size())]);
      }
    }
    out[r] = stat(std::span<const std::size_t>(sample));
  });
  return out;
}

std::vector<double> Column(const std::vector<std::vector<double>>& reps,
                           std::size_t j) {
  std::vector<double> values;
  values.reserve(reps.size());
  for (const auto& r : reps) {
    if (r.size() > j && std::isfinite(r[j])) values.push_back(r[j]);
  }
  return values;
}

void ValidateBootstrap(const BootstrapOptions& options) {
  if (options.replicates < 2) {
    throw ConfigError(kModule, "bootstrap needs at least 2 replicates");
  }
  if (!(options.coverage > 0.0 && options.coverage < 1.0)) {
    throw ConfigError(kModule, "bootstrap coverage must lie in (0, 1)");
  }
}

bool OutcomeValue(const ScoreRecord& r) {
  const double y = *r.outcome;
  if (y != 0.0 && y != 1.0) {
    throw DataError(kModule,
                    fmt::format("outcome must be 0 or 1, got {}", y));
  }
  return y == 1.0;
}

// Point-biserial correlation of score with membership in `group_b`.
double IndicatorCorrelation(std::span<const ScoreRecord> records,
                            std::span<const std::size_t> sample,
                            const std::string& group_b) {
  std::vector<double> score, indicator;
  score.reserve(sample.size());
  indicator.reserve(sample.size());
  for (std::size_t i : sample) {
    score.push_back(records[i].score);
    indicator.push_back(records[i].group == group_b ? 1.0 : 0.0);
  }
  return PearsonCorrelation(score, indicator);
}

struct ErrorCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool HasNegatives() const { return fp + tn > 0; }
  bool HasPositives() const { return tp + fn > 0; }
  double Fpr() const { return static_cast<double>(fp) / (fp + tn); }
  double Fnr() const { return static_cast<double>(fn) / (fn + tp); }
};

std::vector<ErrorCounts> CountErrors(std::span<const ScoreRecord> records,
                                     const Strata& strata,
                                     std::span<const std::size_t> sample,
                                     const ThresholdRule& rule) {
  std::vector<ErrorCounts> counts(strata.labels.size());
  for (std::size_t i : sample) {
    const ScoreRecord& r = records[i];
    const bool predicted = r.below_lln ? *r.below_lln : rule.Classify(r.score);
    const bool actual = OutcomeValue(r);
    ErrorCounts& c = counts[strata.IndexOf(r.group)];
    if (actual) {
      (predicted ? c.tp : c.fn)++;
    } else {
      (predicted ? c.fp : c.tn)++;
    }
  }
  return counts;
}

struct RateGaps {
  double fpr = kNaN;
  double fnr = kNaN;
  double Max() const {
    if (std::isnan(fpr)) return fnr;
    if (std::isnan(fnr)) return fpr;
    return std::max(fpr, fnr);
  }
};

// Largest pairwise gap is max - min over the groups where the rate is
// defined; NaN when fewer than two groups qualify.
RateGaps Gaps(const std::vector<ErrorCounts>& counts) {
  double fpr_lo = 1, fpr_hi = 0, fnr_lo = 1, fnr_hi = 0;
  int n_fpr = 0, n_fnr = 0;
  for (const auto& c : counts) {
    if (c.HasNegatives()) {
      fpr_lo = std::min(fpr_lo, c.Fpr());
      fpr_hi = std::max(fpr_hi, c.Fpr());
      ++n_fpr;
    }
    if (c.HasPositives()) {
      fnr_lo = std::min(fnr_lo, c.Fnr());
      fnr_hi = std::max(fnr_hi, c.Fnr());
      ++n_fnr;
    }
  }
  RateGaps g;
  if (n_fpr >= 2) g.fpr = fpr_hi - fpr_lo;
  if (n_fnr >= 2) g.fnr = fnr_hi - fnr_lo;
  return g;
}

// Design for the sufficiency regression: intercept, standardized score, and
// one indicator per non-reference stratum. Standardizing the score only
// rescales its own coefficient; the group coefficients are unchanged.
struct SufficiencyDesign {
  double score_mean = 0.0;
  double score_sd = 1.0;
  std::size_t columns = 0;
};

LogisticFit FitSample(std::span<const ScoreRecord> records,
                      const Strata& strata, std::span<const std::size_t> sample,
                      const SufficiencyDesign& d) {
  std::vector<double> x(sample.size() * d.columns, 0.0);
  std::vector<double> y(sample.size());
  for (std::size_t row = 0; row < sample.size(); ++row) {
    const ScoreRecord& r = records[sample[row]];
    double* xr = &x[row * d.columns];
    xr[0] = 1.0;
    xr[1] = (r.score - d.score_mean) / d.score_sd;
    const std::size_t g = strata.IndexOf(r.group);
    if (g > 0) xr[1 + g] = 1.0;
    y[row] = OutcomeValue(r) ? 1.0 : 0.0;
  }
  return FitLogistic(x, d.columns, y);
}

// Largest between-group difference in outcome rate within pooled score
// deciles, over cells holding at least kMinDecileCell records per group.
std::optional<double> DecileRateGap(std::span<const ScoreRecord> records,
                                    const Strata& strata,
                                    std::span<const std::size_t> sample) {
  std::vector<double> scores;
  for (std::size_t i : sample) scores.push_back(records[i].score);
  std::vector<double> cuts;
  for (int k = 1; k < 10; ++k) cuts.push_back(Quantile(scores, k / 10.0));

  const std::size_t groups = strata.labels.size();
  std::vector<std::size_t> n(10 * groups, 0), events(10 * groups, 0);
  for (std::size_t i : sample) {
    const auto bin = static_cast<std::size_t>(
        std::upper_bound(cuts.begin(), cuts.end(), records[i].score) -
        cuts.begin());
    const std::size_t cell = bin * groups + strata.IndexOf(records[i].group);
    ++n[cell];
    if (OutcomeValue(records[i])) ++events[cell];
  }
  std::optional<double> gap;
  for (std::size_t bin = 0; bin < 10; ++bin) {
    double lo = 1.0, hi = 0.0;
    int qualifying = 0;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t cell = bin * groups + g;
      if (n[cell] < kMinDecileCell) continue;
      const double rate = static_cast<double>(events[cell]) / n[cell];
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
      ++qualifying;
    }
    if (qualifying >= 2) gap = std::max(gap.value_or(0.0), hi - lo);
  }
  return gap;
}

std::vector<std::size_t> AllMembers(const Strata& strata) {
  std::vector<std::size_t> all;
  for (const auto& m : strata.members) all.insert(all.end(), m.begin(), m.end());
  return all;
}

}  // namespace

std::string_view ToString(Criterion criterion) {
  switch (criterion) {
    case Criterion::kIndependence:
      return "independence";
    case Criterion::kSeparation:
      return "separation";
    case Criterion::kSufficiency:
      return "sufficiency";
  }
  return "independence";
}

std::string_view ToString(Verdict verdict) {
  switch (verdict) {
    case Verdict::kConsistent:
      return "consistent";
    case Verdict::kViolated:
      return "violated";
    case Verdict::kUndetermined:
      return "undetermined";
  }
  return "undetermined";
}

std::optional<Criterion> ParseCriterion(std::string_view text) {
  for (Criterion c : {Criterion::kIndependence, Criterion::kSeparation,
                      Criterion::kSufficiency}) {
    if (text == ToString(c)) return c;
  }
  return std::nullopt;
}

AuditReport IndependenceCheck(std::span<const ScoreRecord> records,
                              std::string_view group_a,
                              std::string_view group_b, double tolerance,
                              const BootstrapOptions& bootstrap,
                              std::string score_name) {
  ValidateBootstrap(bootstrap);
  if (group_a == group_b) {
    throw ConfigError(kModule, "independence check needs two distinct groups");
  }
  const Strata strata = Stratify(records, [&](const ScoreRecord& r) {
    return r.group == group_a || r.group == group_b;
  });
  AuditReport report;
  report.criterion = Criterion::kIndependence;
  report.score_name = std::move(score_name);
  report.statistic_name = "point_biserial_r";
  report.tolerance = tolerance;
  report.n_per_group = CountPerGroup(strata);
  for (std::string_view g : {group_a, group_b}) {
    const std::size_t n = report.n_per_group[std::string(g)];
    if (n < kMinRecordsPerGroup) {
      throw DataError(kModule,
                      fmt::format("independence check needs at least {} "
                                  "records in group '{}', got {}",
                                  kMinRecordsPerGroup, g, n));
    }
  }

  std::vector<double> a, b;
  for (const auto& r : records) {
    if (r.group == group_a) a.push_back(r.score);
    if (r.group == group_b) b.push_back(r.score);
  }
  const std::string label_b(group_b);
  const std::vector<std::size_t> all = AllMembers(strata);
  report.statistic = IndicatorCorrelation(records, all, label_b);

  const double mean_a = Mean(a), mean_b = Mean(b);
  const double var_a = SampleVariance(a), var_b = SampleVariance(b);
  const double pooled_var =
      ((a.size() - 1) * var_a + (b.size() - 1) * var_b) /
      static_cast<double>(a.size() + b.size() - 2);
  report.details["mean_" + std::string(group_a)] = mean_a;
  report.details["mean_" + label_b] = mean_b;
  report.details["mean_difference"] = mean_b - mean_a;
  report.details["smd"] =
      pooled_var > 0.0 ? (mean_b - mean_a) / std::sqrt(pooled_var) : 0.0;

  std::vector<double> all_scores(a);
  all_scores.insert(all_scores.end(), b.begin(), b.end());
  if (SampleVariance(all_scores) == 0.0) {
    report.degenerate = true;
    report.notes.push_back(
        "score has zero variance; correlation set to 0 and no interval "
        "computed");
    report.ci_low = report.ci_high = 0.0;
    report.verdict = Verdict::kConsistent;
    return report;
  }

  const auto reps = Bootstrap(
      strata, bootstrap, kTagIndependence,
      [&](std::span<const std::size_t> sample) {
        return std::vector<double>{
            IndicatorCorrelation(records, sample, label_b)};
      });
  const Interval ci = PercentileInterval(Column(reps, 0), bootstrap.coverage);
  report.ci_low = ci.low;
  report.ci_high = ci.high;
  report.verdict = std::abs(report.statistic) <= tolerance ? Verdict::kConsistent
                                                           : Verdict::kViolated;
  return report;
}

AuditReport SeparationCheck(std::span<const ScoreRecord> records,
                            const ThresholdRule& rule, double tolerance,
                            const BootstrapOptions& bootstrap,
                            std::string score_name) {
  ValidateBootstrap(bootstrap);
  std::size_t missing = 0;
  const Strata strata = Stratify(records, [&](const ScoreRecord& r) {
    if (!r.outcome) ++missing;
    return r.outcome.has_value();
  });
  AuditReport report;
  report.criterion = Criterion::kSeparation;
  report.score_name = std::move(score_name);
  report.statistic_name = "max_error_rate_gap";
  report.tolerance = tolerance;
  report.n_per_group = CountPerGroup(strata);
  report.details["threshold"] = rule.cutoff;
  if (missing > 0) {
    report.notes.push_back(
        fmt::format("{} records without an outcome excluded", missing));
  }
  if (strata.labels.size() < 2) {
    report.verdict = Verdict::kUndetermined;
    report.notes.push_back("fewer than two groups with outcomes");
    return report;
  }

  const std::vector<std::size_t> all = AllMembers(strata);
  const auto counts = CountErrors(records, strata, all, rule);
  std::size_t predicted_positive = 0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    const ErrorCounts& c = counts[g];
    const std::string& label = strata.labels[g];
    predicted_positive += c.tp + c.fp;
    if (c.HasNegatives()) {
      report.details["fpr_" + label] = c.Fpr();
    } else {
      report.notes.push_back(fmt::format(
          "group '{}' has no negative outcomes; omitted from FPR comparison",
          label));
    }
    if (c.HasPositives()) {
      report.details["fnr_" + label] = c.Fnr();
    } else {
      report.notes.push_back(fmt::format(
          "group '{}' has no positive outcomes; omitted from FNR comparison",
          label));
    }
  }
  if (predicted_positive == 0) {
    report.degenerate = true;
    report.notes.push_back(
        "no record classified positive: FPR is 0 everywhere and only FNR "
        "carries information");
  }

  const RateGaps gaps = Gaps(counts);
  if (!std::isnan(gaps.fpr)) report.details["fpr_gap"] = gaps.fpr;
  if (!std::isnan(gaps.fnr)) report.details["fnr_gap"] = gaps.fnr;
  report.statistic = gaps.Max();
  if (std::isnan(report.statistic)) {
    report.statistic = 0.0;
    report.verdict = Verdict::kUndetermined;
    report.notes.push_back("no error rate is defined in two or more groups");
    return report;
  }

  const auto reps = Bootstrap(
      strata, bootstrap, kTagSeparation,
      [&](std::span<const std::size_t> sample) {
        return std::vector<double>{
            Gaps(CountErrors(records, strata, sample, rule)).Max()};
      });
  const auto values = Column(reps, 0);
  if (values.size() >= 2) {
    const Interval ci = PercentileInterval(values, bootstrap.coverage);
    report.ci_low = ci.low;
    report.ci_high = ci.high;
  } else {
    report.ci_low = report.ci_high = report.statistic;
  }
  report.verdict = report.statistic <= tolerance ? Verdict::kConsistent
                                                 : Verdict::kViolated;
  return report;
}

AuditReport SufficiencyCheck(std::span<const ScoreRecord> records,
                             const BootstrapOptions& bootstrap,
                             std::string score_name) {
  ValidateBootstrap(bootstrap);
  std::size_t missing = 0;
  const Strata strata = Stratify(records, [&](const ScoreRecord& r) {
    if (!r.outcome) ++missing;
    return r.outcome.has_value();
  });
  AuditReport report;
  report.criterion = Criterion::kSufficiency;
  report.score_name = std::move(score_name);
  report.statistic_name = "group_coefficient";
  report.n_per_group = CountPerGroup(strata);
  if (missing > 0) {
    report.notes.push_back(
        fmt::format("{} records without an outcome excluded", missing));
  }
  if (strata.labels.size() < 2) {
    throw DataError(kModule, "sufficiency check needs at least two groups");
  }
  report.notes.push_back(
      fmt::format("reference group '{}'", strata.labels.front()));

  const std::vector<std::size_t> all = AllMembers(strata);
  std::vector<double> scores;
  for (std::size_t i : all) scores.push_back(records[i].score);
  SufficiencyDesign design;
  design.columns = strata.labels.size() + 1;
  design.score_mean = Mean(scores);
  const double sd = std::sqrt(SampleVariance(scores));
  if (sd == 0.0) {
    report.degenerate = true;
    report.verdict = Verdict::kUndetermined;
    report.notes.push_back("score has zero variance; regression undefined");
    return report;
  }
  design.score_sd = sd;

  if (const auto gap = DecileRateGap(records, strata, all)) {
    report.details["decile_max_rate_gap"] = *gap;
  }

  const LogisticFit full = FitSample(records, strata, all, design);
  if (!full.converged) {
    report.verdict = Verdict::kUndetermined;
    report.notes.push_back(full.separated
                               ? "logistic fit hit (quasi-)separation"
                               : "logistic fit did not converge");
    return report;
  }
  report.details["score_coefficient_per_sd"] = full.coefficients[1];

  const std::size_t k = strata.labels.size() - 1;
  const auto reps = Bootstrap(
      strata, bootstrap, kTagSufficiency,
      [&](std::span<const std::size_t> sample) {
        const LogisticFit fit = FitSample(records, strata, sample, design);
        if (!fit.converged) return std::vector<double>{};
        return std::vector<double>(fit.coefficients.begin() + 2,
                                   fit.coefficients.end());
      });
  std::size_t failed = 0;
  for (const auto& r : reps) failed += r.empty() ? 1 : 0;
  if (failed > 0) {
    report.notes.push_back(fmt::format(
        "{} of {} bootstrap fits failed and were skipped", failed, reps.size()));
  }
  if (2 * failed > reps.size()) {
    report.verdict = Verdict::kUndetermined;
    report.notes.push_back("too few successful bootstrap fits");
    return report;
  }

  bool all_cover = true;
  double largest = -1.0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::string& label = strata.labels[j + 1];
    const double coef = full.coefficients[j + 2];
    const Interval ci = PercentileInterval(Column(reps, j), bootstrap.coverage);
    report.details["coef_" + label] = coef;
    report.details["se_" + label] = full.standard_errors[j + 2];
    report.details["ci_low_" + label] = ci.low;
    report.details["ci_high_" + label] = ci.high;
    if (!(ci.low <= 0.0 && 0.0 <= ci.high)) all_cover = false;
    if (std::abs(coef) > largest) {
      largest = std::abs(coef);
      report.statistic = coef;
      report.ci_low = ci.low;
      report.ci_high = ci.high;
    }
  }
  report.verdict = all_cover ? Verdict::kConsistent : Verdict::kViolated;
  return report;
}

std::vector<AuditReport> ImpossibilityPanel(std::span<const ScoreSeries> series,
                                            const PanelOptions& options) {
  std::vector<AuditReport> reports;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const ScoreSeries& ser = series[s];
    BootstrapOptions boot = options.bootstrap;
    boot.seed = StreamKey(options.bootstrap.seed, s);
    for (Criterion c : options.criteria) {
      switch (c) {
        case Criterion::kIndependence:
          reports.push_back(IndependenceCheck(
              ser.records, options.group_a, options.group_b,
              options.independence_tolerance, boot, ser.name));
          break;
        case Criterion::kSeparation:
          if (!ser.threshold) {
            AuditReport r;
            r.criterion = c;
            r.score_name = ser.name;
            r.statistic_name = "max_error_rate_gap";
            r.tolerance = options.separation_tolerance;
            r.notes.push_back("no threshold rule for this score");
            reports.push_back(std::move(r));
          } else {
            reports.push_back(SeparationCheck(ser.records, *ser.threshold,
                                              options.separation_tolerance,
                                              boot, ser.name));
          }
          break;
        case Criterion::kSufficiency:
          reports.push_back(SufficiencyCheck(ser.records, boot, ser.name));
          break;
      }
    }
  }
  return reports;
}

std::string RenderPanel(std::span<const AuditReport> reports) {
  std::vector<std::string> scores;
  std::vector<Criterion> criteria;
  for (const auto& r : reports) {
    if (std::find(scores.begin(), scores.end(), r.score_name) == scores.end()) {
      scores.push_back(r.score_name);
    }
    if (std::find(criteria.begin(), criteria.end(), r.criterion) ==
        criteria.end()) {
      criteria.push_back(r.criterion);
    }
  }
  std::size_t name_width = 5;
  for (const auto& s : scores) name_width = std::max(name_width, s.size());
  constexpr std::size_t kCell = 38;

  std::string out = fmt::format("{:<{}}", "score", name_width);
  for (Criterion c : criteria) out += fmt::format(" | {:<{}}", ToString(c), kCell);
  out += '\n';
  out += std::string(name_width, '-');
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    out += "-+-" + std::string(kCell, '-');
  }
  out += '\n';
  for (const auto& s : scores) {
    out += fmt::format("{:<{}}", s, name_width);
    for (Criterion c : criteria) {
      std::string cell = "-";
      for (const auto& r : reports) {
        if (r.score_name != s || r.criterion != c) continue;
        cell = r.verdict == Verdict::kUndetermined
                   ? std::string("undetermined")
                   : fmt::format("{} {:+.3f} [{:+.3f}, {:+.3f}]",
                                 ToString(r.verdict), r.statistic, r.ci_low,
                                 r.ci_high);
      }
      out += fmt::format(" | {:<{}}", cell, kCell);
    }
    out += '\n';
  }
  return out;
}

}  // namespace spiro
