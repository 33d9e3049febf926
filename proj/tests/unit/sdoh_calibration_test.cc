#include "spiro/sdoh_calibration.h"

#include <gtest/gtest.h>

#include <cmath>

#include "spiro/error.h"
#include "spiro/synth.h"
#include "test_support.h"

namespace spiro {
namespace {

using testing::UniformIn;

// Black and White synthetic tables differ by a constant log-offset, so any
// blend of their medians is itself an exact table.
TableSet BlendedTables(double phi0) {
  TableSet tables;
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    const auto white = MakeSyntheticTable("White", sex, 1.0);
    const auto black = MakeSyntheticTable("Black", sex, 0.86);
    tables.Add(BlendMedianTable(black, white, phi0, white, "pooled"));
    tables.Add(white);
    tables.Add(black);
  }
  return tables;
}

Cohort RandomGroup(std::uint64_t seed, std::size_t n, const std::string& group) {
  Cohort c;
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(StreamKey(seed, i));
    auto p = testing::MakeParticipant("p" + std::to_string(i), group,
                                      UniformIn(rng, 1.5, 5.0),
                                      UniformIn(rng, 20, 80),
                                      UniformIn(rng, 150, 195),
                                      rng.Uniform() < 0.5 ? Sex::kMale : Sex::kFemale);
    c.push_back(p);
  }
  return c;
}

TEST(AdjustedMedianTest, EndpointsAndMidpoint) {
  EXPECT_EQ(AdjustedMedian(3.0, 5.0, 0.0), 3.0);
  EXPECT_EQ(AdjustedMedian(3.0, 5.0, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(AdjustedMedian(3.0, 5.0, 0.5), 4.0);
}

TEST(AdjustedZTest, WorkedExample) {
  TableSet t;
  const auto k = testing::FlatTable("Black", Sex::kMale, 3.0);
  const auto p = testing::FlatTable("White", Sex::kMale, 5.0);
  const auto pooled = testing::FlatTable("pooled", Sex::kMale, 4.2, 0.1, 1.0);
  const DemographicInput x{50, 170, Sex::kMale, "Black"};
  EXPECT_NEAR(AdjustedPrediction(x, k, p, 0.5), 4.0, 1e-12);
  EXPECT_NEAR(AdjustedZ(x, 4.4, k, p, pooled, 0.5), 1.0, 1e-12);
  EXPECT_THROW(AdjustedZ(x, 4.4, k, p, pooled, 1.5), DomainError);
}

TEST(AdjustedZTest, EndpointsReduceToGroupTables) {
  const auto tables = BlendedTables(0.3);
  const auto& k = tables.Get("Black", Sex::kFemale);
  const auto& p = tables.Get("White", Sex::kFemale);
  const auto& pooled = tables.Get("pooled", Sex::kFemale);
  EXPECT_TRUE(testing::ForAll(
      31, 300,
      [](CounterRng& rng) {
        return std::array<double, 3>{UniformIn(rng, 20, 90), UniformIn(rng, 145, 190),
                                     UniformIn(rng, 1, 4)};
      },
      [&](const std::array<double, 3>& v) -> ::testing::AssertionResult {
        const DemographicInput x{v[0], v[1], Sex::kFemale, "Black"};
        const LmsParams lp = pooled.Predict(x);
        const double z0 = ZScore(v[2], k.Predict(x).median, lp.l, lp.s);
        const double z1 = ZScore(v[2], p.Predict(x).median, lp.l, lp.s);
        if (std::abs(AdjustedZ(x, v[2], k, p, pooled, 0.0) - z0) > 1e-12 ||
            std::abs(AdjustedZ(x, v[2], k, p, pooled, 1.0) - z1) > 1e-12) {
          return ::testing::AssertionFailure() << "endpoint mismatch";
        }
        return ::testing::AssertionSuccess();
      }));
}

class ExactRecoveryTest : public ::testing::TestWithParam<int> {};

TEST_P(ExactRecoveryTest, RecoversBlendFraction) {
  const double phi0 = GetParam() / 10.0;
  const auto tables = BlendedTables(phi0);
  const Cohort cohort = RandomGroup(100 + GetParam(), 400, "Black");
  for (PhiMetric metric : {PhiMetric::kZScore, PhiMetric::kPercentPredicted}) {
    PhiOptions opt;
    opt.metric = metric;
    const PhiEstimate est = EstimatePhi(cohort, tables, "Black", "White", "pooled", opt);
    EXPECT_NEAR(est.phi_hat, phi0, 1e-3) << ToString(metric);
    EXPECT_LT(est.objective_at_min, 1e-10);
    EXPECT_EQ(est.n_used, cohort.size());
    EXPECT_EQ(est.boundary, BoundaryFlag::kNone);
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, ExactRecoveryTest, ::testing::Range(0, 11));

TEST(EstimatePhiTest, CurveCoversGridAndMinimumIsLocal) {
  // Equal-weight pooling averages log medians, so the pooled median is the
  // geometric mean of the two group medians.
  TableSet tables;
  const auto white = MakeSyntheticTable("White", Sex::kMale, 1.0);
  const auto black = MakeSyntheticTable("Black", Sex::kMale, 0.86);
  tables.Add(white);
  tables.Add(black);
  const CoefficientTable parts[] = {white, black};
  const double w[] = {0.5, 0.5};
  tables.Add(BuildPooledTable(parts, w, "pooled"));
  Cohort cohort = RandomGroup(5, 500, "Black");
  for (auto& p : cohort) p.sex = Sex::kMale;
  const auto inputs = BuildPhiInputs(cohort, tables, "Black", "White", "pooled");
  const PhiEstimate est = EstimatePhi(inputs);
  EXPECT_EQ(est.objective_curve.size(), 1001u);
  EXPECT_EQ(est.objective_curve.front().first, 0.0);
  EXPECT_EQ(est.objective_curve.back().first, 1.0);
  for (double d : {-1e-3, 1e-3}) {
    const double phi = std::clamp(est.phi_hat + d, 0.0, 1.0);
    EXPECT_LE(est.objective_at_min, PhiObjective(inputs, phi, PhiMetric::kZScore));
  }
  // In units of the group median: sqrt(c) = 1 + phi (c - 1), c = 1 / 0.86.
  const double c = 1 / 0.86;
  EXPECT_NEAR(est.phi_hat, (std::sqrt(c) - 1) / (c - 1), 2e-3);
}

TEST(EstimatePhiTest, BoundaryFlags) {
  // Pooled medians below the group's own or above the privileged one lie
  // outside the family, so the clipped optimum sits on an edge.
  TableSet tables;
  tables.Add(testing::FlatTable("White", Sex::kMale, 4.0));
  tables.Add(testing::FlatTable("Black", Sex::kMale, 3.4));
  tables.Add(testing::FlatTable("pooled", Sex::kMale, 3.2));
  const Cohort cohort = [] {
    Cohort c = RandomGroup(8, 100, "Black");
    for (auto& p : c) p.sex = Sex::kMale;
    return c;
  }();
  const auto low = EstimatePhi(cohort, tables, "Black", "White", "pooled");
  EXPECT_EQ(low.phi_hat, 0.0);
  EXPECT_EQ(low.boundary, BoundaryFlag::kLower);

  TableSet high_tables;
  high_tables.Add(testing::FlatTable("White", Sex::kMale, 4.0));
  high_tables.Add(testing::FlatTable("Black", Sex::kMale, 3.4));
  high_tables.Add(testing::FlatTable("pooled", Sex::kMale, 4.3));
  const auto high = EstimatePhi(cohort, high_tables, "Black", "White", "pooled");
  EXPECT_EQ(high.phi_hat, 1.0);
  EXPECT_EQ(high.boundary, BoundaryFlag::kUpper);
}

TEST(EstimatePhiTest, FlatObjectiveIsNumericalError) {
  TableSet tables;
  tables.Add(testing::FlatTable("White", Sex::kMale, 4.0));
  tables.Add(testing::FlatTable("Black", Sex::kMale, 4.0));
  tables.Add(testing::FlatTable("pooled", Sex::kMale, 4.0));
  Cohort c = RandomGroup(9, 50, "Black");
  for (auto& p : c) p.sex = Sex::kMale;
  EXPECT_THROW(EstimatePhi(c, tables, "Black", "White", "pooled"), NumericalError);
}

TEST(EstimatePhiTest, TooFewParticipants) {
  const auto tables = BlendedTables(0.5);
  const Cohort c = RandomGroup(10, 29, "Black");
  EXPECT_THROW(EstimatePhi(c, tables, "Black", "White", "pooled"), DataError);
  PhiOptions opt;
  opt.min_participants = 20;
  EXPECT_NO_THROW(EstimatePhi(c, tables, "Black", "White", "pooled", opt));
}

TEST(EstimatePhiTest, SkipsUnmeasuredAndOtherGroups) {
  const auto tables = BlendedTables(0.5);
  Cohort c = RandomGroup(11, 40, "Black");
  c[0].fev1.reset();
  c[1].group = "White";
  std::size_t skipped = 0;
  const auto inputs = BuildPhiInputs(c, tables, "Black", "White", "pooled", &skipped);
  EXPECT_EQ(inputs.size(), 38u);
  EXPECT_EQ(skipped, 1u);
}

TEST(EstimatePhiTest, ThreadCountDoesNotChangeResult) {
  const auto tables = BlendedTables(0.37);
  const Cohort c = RandomGroup(12, 300, "Black");
  PhiOptions one, four;
  four.threads = 4;
  const auto a = EstimatePhi(c, tables, "Black", "White", "pooled", one);
  const auto b = EstimatePhi(c, tables, "Black", "White", "pooled", four);
  EXPECT_EQ(a.phi_hat, b.phi_hat);
  EXPECT_EQ(a.objective_curve, b.objective_curve);
}

Participant WithDeficit(const std::string& id, const std::string& group,
                        double fev1, double deficit) {
  auto p = testing::MakeParticipant(id, group, fev1);
  p.provenance = SynthProvenance{fev1 + deficit, deficit};
  return p;
}

TEST(GapSummaryTest, WorkedExample) {
  Cohort c = {WithDeficit("a", "White", 4.1, 0.0), WithDeficit("b", "White", 3.9, 0.1),
              WithDeficit("c", "Black", 3.5, 0.3), WithDeficit("d", "Black", 3.7, 0.3)};
  const GapSummary s = SummarizeGap(c, "Black", "White");
  EXPECT_NEAR(s.mean_gap, 0.4, 1e-12);
  EXPECT_EQ(s.n_group, 2u);
  ASSERT_TRUE(s.mean_deficit_diff.has_value());
  EXPECT_NEAR(*s.mean_deficit_diff, 0.25, 1e-12);
  EXPECT_NEAR(*s.phi_true, 0.625, 1e-12);
}

TEST(GapSummaryTest, ZeroGapAndMissingProvenance) {
  Cohort c = {WithDeficit("a", "White", 4.0, 0.0), WithDeficit("b", "Black", 4.0, 0.2)};
  EXPECT_FALSE(SummarizeGap(c, "Black", "White").phi_true.has_value());
  c.push_back(testing::MakeParticipant("e", "Black", 3.0));
  const auto s = SummarizeGap(c, "Black", "White");
  EXPECT_FALSE(s.mean_deficit_diff.has_value());
  EXPECT_THROW(SummarizeGap(c, "Asian", "White"), DataError);
}

TEST(GapSummaryTest, WeightsApply) {
  Cohort c = {testing::MakeParticipant("a", "White", 4.0),
              testing::MakeParticipant("b", "Black", 3.0),
              testing::MakeParticipant("c", "Black", 4.0)};
  c[1].weight = 3.0;
  EXPECT_NEAR(SummarizeGap(c, "Black", "White").mean_gap, 0.5, 1e-12);
  EXPECT_NEAR(SummarizeGap(c, "Black", "White", true).mean_gap, 0.75, 1e-12);
}

}  // namespace
}  // namespace spiro
