#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spiro/csv.h"
#include "spiro/error.h"
#include "spiro/logistic.h"
#include "spiro/parallel.h"
#include "spiro/rng.h"
#include "spiro/stats.h"
#include "test_support.h"

namespace spiro {
namespace {

using testing::ForAll;
using testing::UniformIn;

TEST(CsvTest, QuotedFieldsAndComments) {
  std::istringstream in("# a=1\n#b = 2\nx,y\n\"p,q\",\"say \"\"hi\"\"\"\n\n3,4\n");
  const CsvDocument doc = ReadCsv(in, "test");
  ASSERT_EQ(doc.comments.size(), 2u);
  EXPECT_EQ(doc.header, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(doc.rows.size(), 2u);
  EXPECT_EQ(doc.rows[0][0], "p,q");
  EXPECT_EQ(doc.rows[0][1], "say \"hi\"");
  EXPECT_EQ(doc.Column("y"), 1u);
  EXPECT_FALSE(doc.Column("z").has_value());
}

TEST(CsvTest, StrictRejectsRaggedRow) {
  std::istringstream in("x,y\n1,2\n3\n");
  try {
    ReadCsv(in, "test");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(CsvTest, EscapeRoundTrip) {
  for (const std::string s : {"plain", "a,b", "q\"uote", " lead", ""}) {
    std::ostringstream out;
    WriteCsvRow(out, {s, "z"});
    const auto fields = SplitCsvLine(out.str().substr(0, out.str().size() - 1));
    ASSERT_EQ(fields.size(), 2u) << s;
    EXPECT_EQ(fields[0], s);
  }
}

TEST(CsvTest, ParseDoubleIsStrict) {
  EXPECT_EQ(ParseDouble(" 1.5 "), 1.5);
  EXPECT_FALSE(ParseDouble("1.5x").has_value());
  EXPECT_FALSE(ParseDouble("").has_value());
  EXPECT_FALSE(ParseDouble("abc").has_value());
}

TEST(CsvTest, FormatDoubleRoundTrips) {
  EXPECT_TRUE(ForAll(
      21, 5000,
      [](CounterRng& rng) {
        const double mag = std::exp(UniformIn(rng, -30, 30));
        return rng.Uniform() < 0.5 ? -mag : mag;
      },
      [](double v) -> ::testing::AssertionResult {
        const auto back = ParseDouble(FormatDouble(v));
        if (back && *back == v) return ::testing::AssertionSuccess();
        return ::testing::AssertionFailure() << FormatDouble(v);
      }));
}

TEST(StatsTest, CompensatedSumBeatsNaive) {
  std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(CompensatedSum(v), 2.0);
}

TEST(StatsTest, MomentsAndCorrelation) {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y = {2, 4, 6, 8, 10};
  EXPECT_DOUBLE_EQ(Mean(x), 3.0);
  EXPECT_DOUBLE_EQ(SampleVariance(x), 2.5);
  EXPECT_NEAR(PearsonCorrelation(x, y), 1.0, 1e-15);
  std::vector<double> flat(5, 1.0);
  EXPECT_EQ(PearsonCorrelation(x, flat), 0.0);
}

TEST(StatsTest, QuantileType7) {
  std::vector<double> v = {4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(Quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(Quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(Quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Quantile(v, 0.25), 1.75);
  const Interval iv = PercentileInterval(std::vector<double>{1, 2, 3, 4, 5}, 0.5);
  EXPECT_DOUBLE_EQ(iv.low, 2.0);
  EXPECT_DOUBLE_EQ(iv.high, 4.0);
}

TEST(StatsTest, LogisticIsStableInTails) {
  EXPECT_DOUBLE_EQ(Logistic(0.0), 0.5);
  EXPECT_EQ(Logistic(-1000.0), 0.0);
  EXPECT_EQ(Logistic(1000.0), 1.0);
  EXPECT_NEAR(Logistic(2.0) + Logistic(-2.0), 1.0, 1e-15);
}

TEST(RngTest, StreamsAreReproducibleAndDistinct) {
  CounterRng a(StreamKey(1, 2, 3)), b(StreamKey(1, 2, 3)), c(StreamKey(1, 3, 2));
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
  }
}

TEST(RngTest, UniformMomentsAndIndexRange) {
  CounterRng rng(7);
  const int n = 200000;
  double sum = 0, sq = 0;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
    const auto k = rng.Index(10);
    ASSERT_LT(k, 10u);
    ++counts[k];
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
  for (int c : counts) EXPECT_NEAR(c, n / 10.0, 5 * std::sqrt(n * 0.09));
}

TEST(ParallelTest, CoversEveryIndexOnceForAnyThreadCount) {
  for (int threads : {1, 2, 3, 8, 64}) {
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
      std::vector<std::atomic<int>> hits(n);
      ParallelFor(n, threads, [&](std::size_t i) { hits[i]++; });
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(hits[i].load(), 1);
    }
  }
}

TEST(ParallelTest, PropagatesException) {
  EXPECT_THROW(ParallelFor(100, 4,
                           [](std::size_t i) {
                             if (i == 57) throw DataError("t", "boom");
                           }),
               DataError);
}

// Newton's method on one covariate, written out by hand.
std::pair<double, double> ScalarLogisticOracle(const std::vector<double>& x,
                                               const std::vector<double>& y) {
  double b0 = 0, b1 = 0;
  for (int it = 0; it < 100; ++it) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = 1 / (1 + std::exp(-(b0 + b1 * x[i])));
      const double w = p * (1 - p);
      g0 += y[i] - p;
      g1 += (y[i] - p) * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    b0 += (h11 * g0 - h01 * g1) / det;
    b1 += (-h01 * g0 + h00 * g1) / det;
  }
  return {b0, b1};
}

TEST(LogisticTest, MatchesNewtonOracle) {
  CounterRng rng(99);
  std::vector<double> x, y, design;
  for (int i = 0; i < 500; ++i) {
    const double xi = UniformIn(rng, -2, 2);
    const double p = Logistic(-0.5 + 1.3 * xi);
    x.push_back(xi);
    y.push_back(rng.Uniform() < p ? 1.0 : 0.0);
    design.push_back(1.0);
    design.push_back(xi);
  }
  const LogisticFit fit = FitLogistic(design, 2, y);
  ASSERT_TRUE(fit.converged);
  EXPECT_FALSE(fit.separated);
  const auto [b0, b1] = ScalarLogisticOracle(x, y);
  EXPECT_NEAR(fit.coefficients[0], b0, 1e-7);
  EXPECT_NEAR(fit.coefficients[1], b1, 1e-7);
  EXPECT_GT(fit.standard_errors[1], 0.0);
  EXPECT_LT(fit.standard_errors[1], 0.3);
}

TEST(LogisticTest, FlagsSeparation) {
  std::vector<double> design, y;
  for (int i = 0; i < 40; ++i) {
    design.push_back(1.0);
    design.push_back(i);
    y.push_back(i >= 20 ? 1.0 : 0.0);
  }
  const LogisticFit fit = FitLogistic(design, 2, y);
  EXPECT_TRUE(fit.separated || !fit.converged);
}

}  // namespace
}  // namespace spiro
