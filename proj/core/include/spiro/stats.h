#ifndef SPIRO_STATS_H_
#define SPIRO_STATS_H_

#include <span>
#include <vector>

namespace spiro {

// Neumaier-compensated sum in index order.
double CompensatedSum(std::span<const double> values);

double Mean(std::span<const double> values);

// Sample variance (n - 1 denominator). Returns 0 for fewer than two values.
double SampleVariance(std::span<const double> values);

// Pearson correlation; returns 0 when either input has zero variance.
double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
double Quantile(std::vector<double> values, double q);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Equal-tailed percentile interval at the given coverage (0.95 -> 2.5/97.5).
Interval PercentileInterval(std::vector<double> values, double coverage = 0.95);

double Logistic(double x);

}  // namespace spiro

#endif  // SPIRO_STATS_H_
