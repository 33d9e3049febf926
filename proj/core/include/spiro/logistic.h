#ifndef SPIRO_LOGISTIC_H_
#define SPIRO_LOGISTIC_H_

#include <cstddef>
#include <span>
#include <vector>

namespace spiro {

struct LogisticOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;  // max absolute coefficient change
  // Any |coefficient| beyond this is taken as (quasi-)separation.
  double divergence_bound = 50.0;
};

struct LogisticFit {
  std::vector<double> coefficients;
  std::vector<double> standard_errors;  // from the inverse Fisher information
  int iterations = 0;
  bool converged = false;
  bool separated = false;
};

// Unregularized maximum-likelihood logistic regression by iteratively
// reweighted least squares. `design` is row-major with `columns` columns
// (include an intercept column explicitly); `outcome` holds 0/1 values.
// Never throws on non-convergence; check `converged` and `separated`.
LogisticFit FitLogistic(std::span<const double> design, std::size_t columns,
                        std::span<const double> outcome,
                        const LogisticOptions& options = {});

}  // namespace spiro

#endif  // SPIRO_LOGISTIC_H_
