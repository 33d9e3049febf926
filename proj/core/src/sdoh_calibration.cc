#include "spiro/sdoh_calibration.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "spiro/error.h"
#include "spiro/parallel.h"
#include "spiro/stats.h"

namespace spiro {
namespace {

constexpr char kModule[] = "sdoh_calibration";
constexpr double kFlatObjective = 1e-12;

double TargetScore(const PhiInput& in, PhiMetric metric) {
  if (metric == PhiMetric::kPercentPredicted) {
    return PercentPredicted(in.measured, in.median_pooled);
  }
  return ZScore(in.measured, in.median_pooled, in.l_pooled, in.s_pooled);
}

double AdjustedScore(const PhiInput& in, double phi, PhiMetric metric) {
  const double median =
      AdjustedMedian(in.median_group, in.median_privileged, phi);
  if (metric == PhiMetric::kPercentPredicted) {
    return PercentPredicted(in.measured, median);
  }
  return ZScore(in.measured, median, in.l_pooled, in.s_pooled);
}

// Mean squared difference against precomputed targets, summed in index
// order with Neumaier compensation.
double Objective(std::span<const PhiInput> inputs,
                 std::span<const double> targets, double phi,
                 PhiMetric metric) {
  double sum = 0.0;
  double compensation = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double d = AdjustedScore(inputs[i], phi, metric) - targets[i];
    const double v = d * d;
    const double t = sum + v;
    compensation += (sum >= v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + compensation) / static_cast<double>(inputs.size());
}

// Golden-section search for a minimum of f on [lo, hi].
template <typename F>
double GoldenSection(F&& f, double lo, double hi, double width) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > width) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::string_view ToString(PhiMetric metric) {
  return metric == PhiMetric::kZScore ? "z" : "pctpred";
}

std::string_view ToString(BoundaryFlag flag) {
  switch (flag) {
    case BoundaryFlag::kNone:
      return "none";
    case BoundaryFlag::kLower:
      return "lower";
    case BoundaryFlag::kUpper:
      return "upper";
  }
  return "none";
}

double AdjustedMedian(double median_group, double median_privileged,
                      double phi) {
  return median_group + phi * (median_privileged - median_group);
}

double AdjustedPrediction(const DemographicInput& x,
                          const CoefficientTable& table_group,
                          const CoefficientTable& table_privileged,
                          double phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    throw DomainError(kModule, fmt::format("phi {} outside [0, 1]", phi));
  }
  return AdjustedMedian(table_group.Predict(x).median,
                        table_privileged.Predict(x).median, phi);
}

double AdjustedZ(const DemographicInput& x, double measured,
                 const CoefficientTable& table_group,
                 const CoefficientTable& table_privileged,
                 const CoefficientTable& table_pooled, double phi) {
  const double median =
      AdjustedPrediction(x, table_group, table_privileged, phi);
  const LmsParams pooled = table_pooled.Predict(x);
  return ZScore(measured, median, pooled.l, pooled.s);
}

double PhiObjective(std::span<const PhiInput> inputs, double phi,
                    PhiMetric metric) {
  if (inputs.empty()) throw DataError(kModule, "no participants");
  std::vector<double> targets(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    targets[i] = TargetScore(inputs[i], metric);
  }
  return Objective(inputs, targets, phi, metric);
}

PhiEstimate EstimatePhi(std::span<const PhiInput> inputs,
                        const PhiOptions& options, std::string group) {
  if (inputs.size() < options.min_participants || inputs.empty()) {
    throw DataError(kModule,
                    fmt::format("insufficient participants for group '{}': {} "
                                "< {}",
                                group, inputs.size(), options.min_participants));
  }
  if (!(options.grid_step > 0.0 && options.grid_step <= 0.5)) {
    throw ConfigError(kModule, "grid_step must lie in (0, 0.5]");
  }

  std::vector<double> targets(inputs.size());
  ParallelFor(inputs.size(), options.threads, [&](std::size_t i) {
    targets[i] = TargetScore(inputs[i], options.metric);
  });
  auto objective = [&](double phi) {
    return Objective(inputs, targets, phi, options.metric);
  };

  const auto segments =
      static_cast<std::size_t>(std::llround(1.0 / options.grid_step));
  std::vector<std::pair<double, double>> curve(segments + 1);
  ParallelFor(curve.size(), options.threads, [&](std::size_t i) {
    const double phi =
        static_cast<double>(i) / static_cast<double>(segments);
    curve[i] = {phi, objective(phi)};
  });

  std::size_t best = 0;
  double lowest = curve[0].second;
  double highest = curve[0].second;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].second < curve[best].second) best = i;
    lowest = std::min(lowest, curve[i].second);
    highest = std::max(highest, curve[i].second);
  }
  if (highest - lowest < kFlatObjective) {
    throw NumericalError(
        kModule,
        fmt::format("degenerate gap for group '{}': objective is flat over "
                    "[0, 1] (range {:.3g}); group and privileged medians "
                    "coincide",
                    group, highest - lowest));
  }

  PhiEstimate est;
  est.group = std::move(group);
  est.metric = options.metric;
  est.n_used = inputs.size();
  est.phi_hat = curve[best].first;
  est.objective_at_min = curve[best].second;

  const double lo = curve[best == 0 ? 0 : best - 1].first;
  const double hi = curve[std::min(best + 1, segments)].first;
  const double refined = GoldenSection(objective, lo, hi, options.refine_width);
  const double refined_value = objective(refined);
  if (refined_value < est.objective_at_min) {
    est.phi_hat = refined;
    est.objective_at_min = refined_value;
  }

  // Probe just outside the domain to tell a clipped optimum from one that
  // happens to sit on the edge.
  auto probe = [&](double phi) {
    try {
      return objective(phi);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  if (best == 0 && probe(-options.grid_step) < curve[0].second) {
    est.boundary = BoundaryFlag::kLower;
  } else if (best == segments &&
             probe(1.0 + options.grid_step) < curve[segments].second) {
    est.boundary = BoundaryFlag::kUpper;
  }

  est.objective_curve = std::move(curve);
  return est;
}

std::vector<PhiInput> BuildPhiInputs(std::span<const Participant> cohort,
                                     const TableSet& tables,
                                     std::string_view group,
                                     std::string_view privileged,
                                     std::string_view pooled,
                                     std::size_t* skipped) {
  std::vector<PhiInput> inputs;
  std::size_t n_skipped = 0;
  for (const auto& p : cohort) {
    if (p.group != group) continue;
    if (!p.fev1) {
      ++n_skipped;
      continue;
    }
    const CoefficientTable& tk = tables.Get(group, p.sex);
    const CoefficientTable& tp = tables.Get(privileged, p.sex);
    const CoefficientTable& tg = tables.Get(pooled, p.sex);
    if (!tk.Covers(p.age) || !tp.Covers(p.age) || !tg.Covers(p.age)) {
      ++n_skipped;
      continue;
    }
    const LmsParams mk = tk.Predict(p.age, p.height);
    const LmsParams mp = tp.Predict(p.age, p.height);
    const LmsParams mg = tg.Predict(p.age, p.height);
    inputs.push_back({*p.fev1, mk.median, mp.median, mg.median, mg.l, mg.s});
  }
  if (skipped) *skipped = n_skipped;
  return inputs;
}

PhiEstimate EstimatePhi(std::span<const Participant> cohort,
                        const TableSet& tables, std::string_view group,
                        std::string_view privileged, std::string_view pooled,
                        const PhiOptions& options) {
  std::size_t skipped = 0;
  const auto inputs =
      BuildPhiInputs(cohort, tables, group, privileged, pooled, &skipped);
  PhiEstimate est = EstimatePhi(inputs, options, std::string(group));
  est.n_skipped = skipped;
  return est;
}

GapSummary SummarizeGap(std::span<const Participant> cohort,
                        std::string_view group, std::string_view privileged,
                        bool weighted) {
  struct Moments {
    double weight = 0.0;
    double lf = 0.0;
    double deficit = 0.0;
    std::size_t n = 0;
    bool all_provenance = true;
  };
  Moments mk, mp;
  for (const auto& p : cohort) {
    Moments* m = p.group == group        ? &mk
                 : p.group == privileged ? &mp
                                         : nullptr;
    if (!m || !p.fev1) continue;
    const double w = weighted ? p.weight.value_or(1.0) : 1.0;
    m->weight += w;
    m->lf += w * *p.fev1;
    if (p.provenance) {
      m->deficit += w * p.provenance->deficit;
    } else {
      m->all_provenance = false;
    }
    ++m->n;
  }
  if (mk.n == 0 || mp.n == 0 || mk.weight <= 0.0 || mp.weight <= 0.0) {
    throw DataError(kModule,
                    fmt::format("empty group in gap summary ('{}': {}, '{}': {})",
                                group, mk.n, privileged, mp.n));
  }
  GapSummary s;
  s.group = std::string(group);
  s.privileged = std::string(privileged);
  s.n_group = mk.n;
  s.n_privileged = mp.n;
  s.mean_gap = mp.lf / mp.weight - mk.lf / mk.weight;
  if (mk.all_provenance && mp.all_provenance) {
    s.mean_deficit_diff = mk.deficit / mk.weight - mp.deficit / mp.weight;
    if (s.mean_gap != 0.0) s.phi_true = *s.mean_deficit_diff / s.mean_gap;
  }
  return s;
}

}  // namespace spiro
