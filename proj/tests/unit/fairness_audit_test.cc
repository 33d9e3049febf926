#include "spiro/fairness_audit.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spiro/error.h"
#include "spiro/stats.h"
#include "test_support.h"

namespace spiro {
namespace {

constexpr double kS = 0.12;

struct Person {
  std::string group;
  double lf;
  double z_own;
  double y;
};

// Two groups whose LF follows the same z distribution around different
// medians (3.0 vs 3.9 L, S = 0.12, L = 1), with outcome Bernoulli in raw LF.
std::vector<Person> GapCohort(std::uint64_t seed, std::size_t n_per_group,
                              double slope = -2.0) {
  std::vector<Person> out;
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < 2 * n_per_group; ++i) {
    CounterRng rng(StreamKey(seed, i));
    const bool b = i % 2 == 1;
    const double median = b ? 3.0 : 3.9;
    const double z = normal(rng);
    const double lf = median * (1 + kS * z);
    const double p = Logistic(5.0 + slope * lf);
    out.push_back({b ? "B" : "A", lf, z, rng.Uniform() < p ? 1.0 : 0.0});
  }
  return out;
}

std::vector<ScoreRecord> Records(const std::vector<Person>& people, bool raw) {
  std::vector<ScoreRecord> r;
  for (const auto& p : people) r.push_back({raw ? p.lf : p.z_own, p.group, p.y, {}});
  return r;
}

BootstrapOptions Boot(std::size_t b = 100, int threads = 1) {
  BootstrapOptions o;
  o.replicates = b;
  o.seed = 42;
  o.threads = threads;
  return o;
}

TEST(IndependenceTest, OwnGroupScoresAreIndependent) {
  const auto people = GapCohort(1, 4000);
  const auto rep = IndependenceCheck(Records(people, false), "A", "B", 0.02, Boot());
  EXPECT_LT(std::abs(rep.statistic), 0.02);
  EXPECT_EQ(rep.verdict, Verdict::kConsistent);
  EXPECT_LE(rep.ci_low, rep.statistic);
  EXPECT_GE(rep.ci_high, rep.statistic);
  EXPECT_EQ(rep.n_per_group.at("A"), 4000u);
}

TEST(IndependenceTest, PooledScoreMeanGapMatchesAnalytic) {
  const auto people = GapCohort(2, 4000);
  const double pooled_median = std::sqrt(3.0 * 3.9);
  std::vector<ScoreRecord> recs;
  for (const auto& p : people) {
    recs.push_back({(p.lf / pooled_median - 1) / kS, p.group, {}, {}});
  }
  const auto rep = IndependenceCheck(recs, "A", "B", 0.02, Boot());
  const double analytic = (3.0 - 3.9) / pooled_median / kS;
  // Each group mean has SD about median / pooled_median / sqrt(n).
  EXPECT_NEAR(rep.details.at("mean_difference"), analytic, 4 * 1.2 * std::sqrt(2.0 / 4000));
  EXPECT_EQ(rep.verdict, Verdict::kViolated);
  EXPECT_LT(rep.statistic, -0.5);
}

TEST(IndependenceTest, IdenticalListsGiveZero) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 50; ++i) {
    recs.push_back({std::sin(i * 1.0), "A", {}, {}});
    recs.push_back({std::sin(i * 1.0), "B", {}, {}});
  }
  const auto rep = IndependenceCheck(recs, "A", "B", 0.02, Boot());
  EXPECT_NEAR(rep.statistic, 0.0, 1e-12);
  EXPECT_EQ(rep.verdict, Verdict::kConsistent);
}

TEST(IndependenceTest, DegenerateAndUndersized) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 40; ++i) {
    recs.push_back({1.0, "A", {}, {}});
    recs.push_back({1.0, "B", {}, {}});
  }
  const auto rep = IndependenceCheck(recs, "A", "B", 0.02, Boot());
  EXPECT_TRUE(rep.degenerate);
  recs.resize(40);
  EXPECT_THROW(IndependenceCheck(recs, "A", "B", 0.02, Boot()), DataError);
}

TEST(SeparationTest, IdenticalJointSamplesGiveZeroGaps) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 60; ++i) {
    const double s = std::cos(i * 0.7);
    const double y = i % 3 == 0 ? 1.0 : 0.0;
    recs.push_back({s, "A", y, {}});
    recs.push_back({s, "B", y, {}});
  }
  const auto rep = SeparationCheck(recs, {0.0, true}, 0.05, Boot());
  EXPECT_EQ(rep.statistic, 0.0);
  EXPECT_EQ(rep.verdict, Verdict::kConsistent);
}

TEST(SeparationTest, OwnGroupThresholdMissesMoreInLowerGroup) {
  // Outcome driven by raw LF: at the same z, group B has lower LF and more
  // events, so a z cutoff misses a larger share of B's events.
  const auto people = GapCohort(3, 4000);
  const auto rep =
      SeparationCheck(Records(people, false), {kLlnZ, true}, 0.05, Boot());
  EXPECT_GT(rep.details.at("fnr_B"), rep.details.at("fnr_A"));
  EXPECT_GT(rep.statistic, 0.0);
}

TEST(SeparationTest, AllNegativeClassifier) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 40; ++i) {
    recs.push_back({1.0 + i, "A", static_cast<double>(i % 2), {}});
    recs.push_back({1.0 + i, "B", static_cast<double>(i % 4 == 0), {}});
  }
  const auto rep = SeparationCheck(recs, {-100.0, true}, 0.05, Boot());
  EXPECT_EQ(rep.details.at("fpr_A"), 0.0);
  EXPECT_EQ(rep.details.at("fpr_B"), 0.0);
  EXPECT_EQ(rep.details.at("fnr_A"), 1.0);
  EXPECT_EQ(rep.details.at("fnr_B"), 1.0);
  EXPECT_TRUE(rep.degenerate);
}

TEST(SeparationTest, GroupLackingAClassIsReported) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 40; ++i) {
    recs.push_back({static_cast<double>(i), "A", static_cast<double>(i % 2), {}});
    recs.push_back({static_cast<double>(i), "B", 0.0, {}});
  }
  const auto rep = SeparationCheck(recs, {20.0, true}, 0.05, Boot());
  EXPECT_EQ(rep.details.count("fnr_B"), 0u);
  EXPECT_EQ(rep.details.count("fnr_gap"), 0u);
  EXPECT_TRUE(rep.details.count("fpr_gap"));
  EXPECT_FALSE(rep.notes.empty());
}

TEST(SeparationTest, BelowLlnOverridesRule) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 40; ++i) {
    recs.push_back({0.0, "A", static_cast<double>(i % 2), i % 2 == 1});
    recs.push_back({0.0, "B", static_cast<double>(i % 2), i % 2 == 1});
  }
  const auto rep = SeparationCheck(recs, {-100.0, true}, 0.05, Boot());
  EXPECT_EQ(rep.details.at("fnr_A"), 0.0);
  EXPECT_EQ(rep.details.at("fpr_B"), 0.0);
}

TEST(SufficiencyTest, RawScoreIsSufficient) {
  const auto people = GapCohort(4, 3000);
  const auto rep = SufficiencyCheck(Records(people, true), Boot(200));
  EXPECT_EQ(rep.verdict, Verdict::kConsistent);
  EXPECT_LE(rep.ci_low, 0.0);
  EXPECT_GE(rep.ci_high, 0.0);
  EXPECT_LT(rep.details.at("score_coefficient_per_sd"), 0.0);
}

TEST(SufficiencyTest, OwnGroupZReinjectsGroup) {
  const auto people = GapCohort(5, 3000);
  const auto rep = SufficiencyCheck(Records(people, false), Boot(200));
  EXPECT_EQ(rep.verdict, Verdict::kViolated);
  // Same z, lower LF in B, so B carries more risk.
  EXPECT_GT(rep.details.at("coef_B"), 0.0);
  EXPECT_GT(rep.details.at("ci_low_B"), 0.0);
}

TEST(SufficiencyTest, NullOutcomeHasSmallCoefficient) {
  std::vector<ScoreRecord> recs;
  for (std::size_t i = 0; i < 4000; ++i) {
    CounterRng rng(StreamKey(6, i));
    recs.push_back({rng.Uniform(), i % 2 ? "B" : "A", rng.Uniform() < 0.3 ? 1.0 : 0.0, {}});
  }
  const auto rep = SufficiencyCheck(recs, Boot(200));
  EXPECT_LT(std::abs(rep.statistic), 0.2);
}

TEST(SufficiencyTest, ZeroVarianceScoreIsUndetermined) {
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 80; ++i) recs.push_back({2.0, i % 2 ? "B" : "A", i % 3 == 0 ? 1.0 : 0.0, {}});
  const auto rep = SufficiencyCheck(recs, Boot());
  EXPECT_EQ(rep.verdict, Verdict::kUndetermined);
  EXPECT_TRUE(rep.degenerate);
}

std::vector<ScoreRecord> Relabel(std::vector<ScoreRecord> recs) {
  for (auto& r : recs) r.group = r.group == "A" ? "zeta" : "alpha";
  return recs;
}

TEST(FairnessPropertyTest, RelabelingGroupsChangesNothing) {
  const auto people = GapCohort(7, 500);
  for (bool raw : {false, true}) {
    const auto recs = Records(people, raw);
    const auto relabeled = Relabel(recs);
    const auto i1 = IndependenceCheck(recs, "A", "B", 0.02, Boot());
    const auto i2 = IndependenceCheck(relabeled, "zeta", "alpha", 0.02, Boot());
    EXPECT_EQ(i1.statistic, i2.statistic);
    EXPECT_EQ(i1.ci_low, i2.ci_low);
    EXPECT_EQ(i1.verdict, i2.verdict);
    const ThresholdRule rule{raw ? 3.0 : kLlnZ, true};
    const auto s1 = SeparationCheck(recs, rule, 0.05, Boot());
    const auto s2 = SeparationCheck(relabeled, rule, 0.05, Boot());
    EXPECT_EQ(s1.statistic, s2.statistic);
    EXPECT_EQ(s1.ci_high, s2.ci_high);
    EXPECT_EQ(s1.details.at("fnr_A"), s2.details.at("fnr_zeta"));
    const auto u1 = SufficiencyCheck(recs, Boot());
    const auto u2 = SufficiencyCheck(relabeled, Boot());
    EXPECT_EQ(u1.statistic, u2.statistic);
    EXPECT_EQ(u1.verdict, u2.verdict);
  }
}

TEST(FairnessPropertyTest, IncreasingTransformKeepsCorrelationSign) {
  const auto people = GapCohort(8, 500);
  auto recs = Records(people, true);
  const auto before = IndependenceCheck(recs, "A", "B", 0.02, Boot());
  for (auto& r : recs) r.score = std::exp(2 * r.score) + 5;
  const auto after = IndependenceCheck(recs, "A", "B", 0.02, Boot());
  EXPECT_EQ(std::signbit(before.statistic), std::signbit(after.statistic));
}

TEST(FairnessPropertyTest, BootstrapIsThreadInvariant) {
  const auto people = GapCohort(9, 600);
  const auto recs = Records(people, false);
  for (int threads : {2, 5}) {
    const auto a = SufficiencyCheck(recs, Boot(120, 1));
    const auto b = SufficiencyCheck(recs, Boot(120, threads));
    EXPECT_EQ(a.ci_low, b.ci_low);
    EXPECT_EQ(a.ci_high, b.ci_high);
    const auto c = IndependenceCheck(recs, "A", "B", 0.02, Boot(120, 1));
    const auto d = IndependenceCheck(recs, "A", "B", 0.02, Boot(120, threads));
    EXPECT_EQ(c.ci_low, d.ci_low);
    EXPECT_EQ(c.ci_high, d.ci_high);
  }
}

TEST(PanelTest, ShapeAndMissingThreshold) {
  const auto people = GapCohort(10, 300);
  std::vector<ScoreSeries> series = {{"z", Records(people, false), ThresholdRule{kLlnZ, true}},
                                     {"raw", Records(people, true), std::nullopt}};
  PanelOptions opt;
  opt.group_a = "A";
  opt.group_b = "B";
  opt.bootstrap = Boot();
  const auto reports = ImpossibilityPanel(series, opt);
  ASSERT_EQ(reports.size(), 6u);
  EXPECT_EQ(reports[0].score_name, "z");
  EXPECT_EQ(reports[3].score_name, "raw");
  EXPECT_EQ(reports[4].criterion, Criterion::kSeparation);
  EXPECT_EQ(reports[4].verdict, Verdict::kUndetermined);
  const std::string table = RenderPanel(reports);
  EXPECT_NE(table.find("independence"), std::string::npos);
  EXPECT_NE(table.find("raw"), std::string::npos);

  const std::vector<ScoreSeries> one(series.begin(), series.begin() + 1);
  EXPECT_EQ(ImpossibilityPanel(one, opt).size(), 3u);
}

TEST(PanelTest, NoGapNoiseOutcomeIsConsistentEverywhere) {
  std::vector<ScoreRecord> recs;
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < 20000; ++i) {
    CounterRng rng(StreamKey(11, i));
    recs.push_back({normal(rng), i % 2 ? "B" : "A", rng.Uniform() < 0.2 ? 1.0 : 0.0, {}});
  }
  const std::vector<ScoreSeries> series = {{"z", recs, ThresholdRule{kLlnZ, true}}};
  PanelOptions opt;
  opt.group_a = "A";
  opt.group_b = "B";
  opt.bootstrap = Boot(200);
  for (const auto& r : ImpossibilityPanel(series, opt)) {
    EXPECT_EQ(r.verdict, Verdict::kConsistent) << ToString(r.criterion);
  }
}

TEST(CriterionTest, Parse) {
  EXPECT_EQ(ParseCriterion("separation"), Criterion::kSeparation);
  EXPECT_FALSE(ParseCriterion("calibration").has_value());
}

}  // namespace
}  // namespace spiro
