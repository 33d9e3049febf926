#ifndef SPIRO_SDOH_CALIBRATION_H_
#define SPIRO_SDOH_CALIBRATION_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spiro/cohort.h"
#include "spiro/ref_engine.h"
#include "spiro/table_set.h"

namespace spiro {

// Implicit SDoH fraction calibration.
//
// For a group k and a privileged group p, the family of partially shifted
// medians
//
//   M_adj(x; phi) = M_k(x) + phi * (M_p(x) - M_k(x)),   phi in [0, 1]
//
// interpolates between the two group-specific references. Scoring each
// group-k participant against M_adj with the pooled table's L and S, and
// matching those scores to the pooled reference's own z-scores, identifies
// the fraction phi of the group gap that the pooled reference behaves as if
// it attributes to differential exposure deficits:
//
//   phi_hat = argmin_{phi in [0,1]} mean_i (z_adj(x_i, LF_i; phi) - z_pooled(x_i, LF_i))^2
//
// When the pooled median lies exactly in the family (M_pooled = M_adj(phi0)
// pointwise), the objective vanishes at phi0.

enum class PhiMetric { kZScore, kPercentPredicted };

std::string_view ToString(PhiMetric metric);

// M_k + phi (M_p - M_k).
double AdjustedMedian(double median_group, double median_privileged, double phi);

double AdjustedPrediction(const DemographicInput& x,
                          const CoefficientTable& table_group,
                          const CoefficientTable& table_privileged, double phi);

// z-score of `measured` against the adjusted median with the pooled table's
// L and S at x.
double AdjustedZ(const DemographicInput& x, double measured,
                 const CoefficientTable& table_group,
                 const CoefficientTable& table_privileged,
                 const CoefficientTable& table_pooled, double phi);

// Per-participant quantities the objective needs; everything that does not
// depend on phi is evaluated once.
struct PhiInput {
  double measured = 0.0;
  double median_group = 0.0;
  double median_privileged = 0.0;
  double median_pooled = 0.0;
  double l_pooled = 0.0;
  double s_pooled = 0.0;
};

struct PhiOptions {
  PhiMetric metric = PhiMetric::kZScore;
  std::size_t min_participants = 30;
  double grid_step = 0.001;
  double refine_width = 1e-6;
  int threads = 1;
};

enum class BoundaryFlag { kNone, kLower, kUpper };

std::string_view ToString(BoundaryFlag flag);

struct PhiEstimate {
  std::string group;
  double phi_hat = 0.0;
  double objective_at_min = 0.0;
  std::vector<std::pair<double, double>> objective_curve;  // (phi, mean sq diff)
  std::size_t n_used = 0;
  std::size_t n_skipped = 0;  // no FEV1, or outside a table's age grid
  PhiMetric metric = PhiMetric::kZScore;
  // Set when the minimizer sits on a domain edge and the objective keeps
  // decreasing beyond it, i.e. the unconstrained optimum was clipped.
  BoundaryFlag boundary = BoundaryFlag::kNone;
};

// Mean squared score difference at phi. Deterministic fixed-order
// compensated summation.
double PhiObjective(std::span<const PhiInput> inputs, double phi,
                    PhiMetric metric);

// Grid search over [0, 1] with `grid_step`, then golden-section refinement
// around the best grid point down to `refine_width`. Throws DataError when
// fewer than `min_participants` inputs are supplied and NumericalError when
// the objective is flat (max - min < 1e-12 over the grid).
PhiEstimate EstimatePhi(std::span<const PhiInput> inputs,
                        const PhiOptions& options = {},
                        std::string group = "");

// Restricts `cohort` to participants of `group` with a FEV1 measurement and
// evaluates the three references at each participant's own covariates and
// sex. Participants outside any table's age grid are skipped and counted.
std::vector<PhiInput> BuildPhiInputs(std::span<const Participant> cohort,
                                     const TableSet& tables,
                                     std::string_view group,
                                     std::string_view privileged,
                                     std::string_view pooled,
                                     std::size_t* skipped = nullptr);

PhiEstimate EstimatePhi(std::span<const Participant> cohort,
                        const TableSet& tables, std::string_view group,
                        std::string_view privileged, std::string_view pooled,
                        const PhiOptions& options = {});

struct GapSummary {
  std::string group;
  std::string privileged;
  double mean_gap = 0.0;  // mean LF(privileged) - mean LF(group), liters
  std::size_t n_group = 0;
  std::size_t n_privileged = 0;
  // Populated only when every participant carries synthetic provenance.
  std::optional<double> mean_deficit_diff;  // mean D(group) - mean D(privileged)
  // mean_deficit_diff / mean_gap; nullopt when the gap is zero.
  std::optional<double> phi_true;
};

// Uses FEV1 as LF. With `weighted`, survey weights replace equal weights
// (participants without a weight count as 1). Throws DataError when either
// group has no measured participant.
GapSummary SummarizeGap(std::span<const Participant> cohort,
                        std::string_view group, std::string_view privileged,
                        bool weighted = false);

}  // namespace spiro

#endif  // SPIRO_SDOH_CALIBRATION_H_
