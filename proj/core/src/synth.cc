#include "spiro/synth.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spiro/error.h"
#include "spiro/parallel.h"
#include "spiro/rng.h"
#include "spiro/stats.h"

namespace spiro {
namespace {

constexpr char kModule[] = "synth";
constexpr int kMaxDraws = 1000;
constexpr double kWeightSumTolerance = 1e-9;
constexpr double kSMatchHeight = 170.0;
constexpr double kGridMinAge = 18.0;
constexpr double kGridMaxAge = 95.0;

bool IsProbability(double p) { return p >= 0.0 && p <= 1.0; }

struct Draw {
  Participant participant;
  std::size_t resampled = 0;
};

double DrawHeight(CounterRng& rng, std::normal_distribution<double>& normal,
                  const DemographicRanges& d, Sex sex) {
  const bool male = sex == Sex::kMale;
  const double mean = male ? d.height_mean_male : d.height_mean_female;
  const double sd = male ? d.height_sd_male : d.height_sd_female;
  for (int i = 0; i < kMaxDraws; ++i) {
    const double h = mean + sd * normal(rng);
    if (h >= d.min_height && h <= d.max_height) return h;
  }
  return std::clamp(mean, d.min_height, d.max_height);
}

// Normal(mean, sd) conditioned on >= 0, by rejection. With mean >= 0 at
// least half the draws are accepted.
double DrawDeficit(CounterRng& rng, std::normal_distribution<double>& normal,
                   const SynthGroup& g) {
  if (g.deficit_sd == 0.0) return g.deficit_mean;
  for (int i = 0; i < kMaxDraws; ++i) {
    const double d = g.deficit_mean + g.deficit_sd * normal(rng);
    if (d >= 0.0) return d;
  }
  return g.deficit_mean;
}

void RequireSameGrid(const CoefficientTable& a, const CoefficientTable& b) {
  const auto& ra = a.rows();
  const auto& rb = b.rows();
  bool same = ra.size() == rb.size();
  for (std::size_t i = 0; same && i < ra.size(); ++i) {
    same = ra[i].age == rb[i].age;
  }
  if (!same) {
    throw DataError(kModule,
                    fmt::format("age grids of tables '{}' and '{}' differ",
                                a.table_id(), b.table_id()));
  }
  if (a.sex() != b.sex()) {
    throw DataError(kModule,
                    fmt::format("tables '{}' and '{}' are for different sexes",
                                a.table_id(), b.table_id()));
  }
}

double SAt(const TableRow& r, double height) {
  return std::exp(r.s_intercept + r.s_ln_height * std::log(height) +
                  r.s_ln_age * std::log(r.age) + r.s_spline);
}

std::string DefaultId(std::string_view prefix, const std::string& group,
                      Sex sex) {
  return fmt::format("{}-{}-{}", prefix, group, ToString(sex));
}

}  // namespace

std::string_view ToString(OutcomeModelKind kind) {
  switch (kind) {
    case OutcomeModelKind::kLogisticLf:
      return "logistic_lf";
    case OutcomeModelKind::kLogisticAge:
      return "logistic_age";
    case OutcomeModelKind::kNoise:
      return "noise";
  }
  return "noise";
}

void SynthSpec::Validate() const {
  if (groups.empty()) throw ConfigError(kModule, "spec has no groups");
  std::set<std::string> labels;
  for (const auto& g : groups) {
    if (g.label.empty()) throw ConfigError(kModule, "group with empty label");
    if (!labels.insert(g.label).second) {
      throw ConfigError(kModule, fmt::format("duplicate group '{}'", g.label));
    }
    if (g.n == 0) {
      throw ConfigError(kModule, fmt::format("group '{}' has n = 0", g.label));
    }
    if (!(g.deficit_mean >= 0.0) || !std::isfinite(g.deficit_mean)) {
      throw ConfigError(kModule,
                        fmt::format("group '{}': deficit_mean must be >= 0",
                                    g.label));
    }
    if (!(g.deficit_sd >= 0.0) || !std::isfinite(g.deficit_sd)) {
      throw ConfigError(kModule,
                        fmt::format("group '{}': deficit_sd must be >= 0",
                                    g.label));
    }
  }
  const auto& d = demographics;
  if (!(d.min_age <= d.max_age) || !(d.min_age > 0.0)) {
    throw ConfigError(kModule, "demographics: need 0 < min_age <= max_age");
  }
  if (!IsProbability(d.male_fraction)) {
    throw ConfigError(kModule, "demographics: male_fraction outside [0, 1]");
  }
  if (!(d.min_height < d.max_height) || !(d.min_height > 0.0) ||
      !(d.height_sd_male >= 0.0) || !(d.height_sd_female >= 0.0)) {
    throw ConfigError(kModule, "demographics: invalid height distribution");
  }
  std::set<std::string> outcome_names;
  for (const auto& o : outcomes) {
    if (o.name.empty()) throw ConfigError(kModule, "outcome with empty name");
    if (!outcome_names.insert(o.name).second) {
      throw ConfigError(kModule, fmt::format("duplicate outcome '{}'", o.name));
    }
  }
  if (!IsProbability(flags.smoker_ever) || !IsProbability(flags.respiratory_dx)) {
    throw ConfigError(kModule, "flag rates must lie in [0, 1]");
  }
  for (const auto& [name, rate] : flags.symptoms) {
    if (!IsProbability(rate)) {
      throw ConfigError(kModule,
                        fmt::format("symptom '{}' rate outside [0, 1]", name));
    }
  }
}

SynthSpec SynthSpec::FromJsonText(std::string_view text,
                                  const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(kModule, fmt::format("invalid spec JSON: {}", e.what()));
  }
  SynthSpec spec;
  try {
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tables")) {
      std::filesystem::path p = j.at("tables").get<std::string>();
      spec.tables_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    for (const auto& g : j.at("groups")) {
      SynthGroup group;
      group.label = g.at("label").get<std::string>();
      group.race_ethnicity = g.value("race_ethnicity", group.label);
      group.n = g.at("n").get<std::size_t>();
      group.deficit_mean = g.value("deficit_mean", 0.0);
      group.deficit_sd = g.value("deficit_sd", 0.0);
      group.ideal_group = g.value("ideal_group", group.label);
      spec.groups.push_back(std::move(group));
    }
    if (j.contains("demographics")) {
      const auto& d = j.at("demographics");
      auto& r = spec.demographics;
      r.min_age = d.value("min_age", r.min_age);
      r.max_age = d.value("max_age", r.max_age);
      r.male_fraction = d.value("male_fraction", r.male_fraction);
      r.height_mean_male = d.value("height_mean_male", r.height_mean_male);
      r.height_sd_male = d.value("height_sd_male", r.height_sd_male);
      r.height_mean_female = d.value("height_mean_female", r.height_mean_female);
      r.height_sd_female = d.value("height_sd_female", r.height_sd_female);
      r.min_height = d.value("min_height", r.min_height);
      r.max_height = d.value("max_height", r.max_height);
    }
    if (j.contains("outcomes")) {
      for (const auto& o : j.at("outcomes")) {
        OutcomeModel m;
        m.name = o.at("name").get<std::string>();
        const std::string kind = o.at("model").get<std::string>();
        if (kind == "logistic_lf") {
          m.kind = OutcomeModelKind::kLogisticLf;
        } else if (kind == "logistic_age") {
          m.kind = OutcomeModelKind::kLogisticAge;
        } else if (kind == "noise") {
          m.kind = OutcomeModelKind::kNoise;
        } else {
          throw ConfigError(kModule,
                            fmt::format("unknown outcome model '{}'", kind));
        }
        m.intercept = o.value("intercept", 0.0);
        m.slope = o.value("slope", 0.0);
        spec.outcomes.push_back(std::move(m));
      }
    }
    if (j.contains("flags")) {
      const auto& f = j.at("flags");
      spec.flags.smoker_ever = f.value("smoker_ever", spec.flags.smoker_ever);
      spec.flags.respiratory_dx =
          f.value("respiratory_dx", spec.flags.respiratory_dx);
      if (f.contains("symptoms")) {
        spec.flags.symptoms =
            f.at("symptoms").get<std::map<std::string, double>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(kModule, fmt::format("invalid spec: {}", e.what()));
  }
  spec.Validate();
  return spec;
}

SynthSpec SynthSpec::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(kModule,
                      fmt::format("cannot open spec '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJsonText(buffer.str(), path.parent_path());
}

Cohort Generate(const SynthSpec& spec, const TableSet& ideal_tables,
                SynthReport* report, int threads) {
  spec.Validate();
  const DemographicRanges& demo = spec.demographics;

  // Fail before drawing anything: every ideal table must exist and cover
  // the age range, and no deficit may swallow a typical LF*.
  const double mid_age = 0.5 * (demo.min_age + demo.max_age);
  for (const auto& g : spec.groups) {
    for (Sex sex : {Sex::kMale, Sex::kFemale}) {
      const CoefficientTable& t = ideal_tables.Get(g.ideal_group, sex);
      if (!t.Covers(demo.min_age) || !t.Covers(demo.max_age)) {
        throw DataError(kModule,
                        fmt::format("table '{}' covers ages [{}, {}], spec "
                                    "needs [{}, {}]",
                                    t.table_id(), t.min_age(), t.max_age(),
                                    demo.min_age, demo.max_age));
      }
      const double height =
          sex == Sex::kMale ? demo.height_mean_male : demo.height_mean_female;
      const double typical = t.Predict(mid_age, height).median;
      if (g.deficit_mean >= typical) {
        throw ConfigError(kModule,
                          fmt::format("group '{}': deficit_mean {} L reaches "
                                      "the typical ideal FEV1 {:.3f} L",
                                      g.label, g.deficit_mean, typical));
      }
    }
  }

  std::vector<std::size_t> group_of;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    group_of.insert(group_of.end(), spec.groups[g].n, g);
  }
  std::vector<Draw> draws(group_of.size());
  ParallelFor(draws.size(), threads, [&](std::size_t i) {
    const SynthGroup& g = spec.groups[group_of[i]];
    CounterRng rng(StreamKey(spec.seed, i));
    std::normal_distribution<double> normal;
    Draw& out = draws[i];
    Participant& p = out.participant;
    p.id = fmt::format("S{:06d}", i + 1);
    p.group = g.label;
    p.race_ethnicity = g.race_ethnicity.empty() ? g.label : g.race_ethnicity;
    p.sex = rng.Uniform() < demo.male_fraction ? Sex::kMale : Sex::kFemale;
    p.age = demo.min_age + (demo.max_age - demo.min_age) * rng.Uniform();
    p.height = DrawHeight(rng, normal, demo, p.sex);
    const LmsParams lms =
        ideal_tables.Get(g.ideal_group, p.sex).Predict(p.age, p.height);

    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxDraws) {
        throw NumericalError(kModule,
                             fmt::format("participant {}: no positive FEV1 "
                                         "after {} draws",
                                         p.id, kMaxDraws));
      }
      const double z = normal(rng);
      if (1.0 + lms.l * lms.s * z <= 0.0) {
        ++out.resampled;
        continue;
      }
      const double ideal = InverseZ(z, lms);
      const double deficit = DrawDeficit(rng, normal, g);
      if (ideal - deficit > 0.0) {
        p.fev1 = ideal - deficit;
        p.provenance = SynthProvenance{ideal, deficit};
        break;
      }
      ++out.resampled;
    }

    p.smoker_ever = rng.Uniform() < spec.flags.smoker_ever;
    p.respiratory_dx = rng.Uniform() < spec.flags.respiratory_dx;
    for (const auto& [name, rate] : spec.flags.symptoms) {
      p.symptoms[name] = rng.Uniform() < rate;
    }
    for (const auto& model : spec.outcomes) {
      double x = 0.0;
      if (model.kind == OutcomeModelKind::kLogisticLf) x = *p.fev1;
      if (model.kind == OutcomeModelKind::kLogisticAge) x = p.age;
      const double prob = Logistic(model.intercept + model.slope * x);
      p.outcomes[model.name] = OutcomeRecord::Binary(rng.Uniform() < prob);
    }
  });

  Cohort cohort;
  cohort.reserve(draws.size());
  std::size_t resampled = 0;
  for (auto& d : draws) {
    resampled += d.resampled;
    cohort.push_back(std::move(d.participant));
  }
  if (report) {
    report->resampled = resampled;
    if (10 * resampled > cohort.size()) {
      report->warnings.push_back(fmt::format(
          "{} of {} participants needed resampling (LF <= 0); deficits are "
          "large relative to ideal lung function",
          resampled, cohort.size()));
    }
  }
  return cohort;
}

CoefficientTable BuildPooledTable(std::span<const CoefficientTable> tables,
                                  std::span<const double> weights,
                                  std::string group, std::string table_id) {
  if (tables.empty()) throw DataError(kModule, "no tables to pool");
  if (weights.size() != tables.size()) {
    throw ConfigError(kModule,
                      fmt::format("{} weights for {} tables", weights.size(),
                                  tables.size()));
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError(kModule, "pooling weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw ConfigError(kModule,
                      fmt::format("pooling weights sum to {}, not 1", total));
  }
  for (std::size_t t = 1; t < tables.size(); ++t) {
    RequireSameGrid(tables[0], tables[t]);
  }

  // A unit weight reproduces that table exactly; the generic S match below
  // would round-trip through exp/log.
  const auto unit = std::find(weights.begin(), weights.end(), 1.0);
  bool shared_s_height = true;
  for (const auto& t : tables) {
    for (std::size_t i = 0; i < t.rows().size(); ++i) {
      shared_s_height &=
          t.rows()[i].s_ln_height == tables[0].rows()[i].s_ln_height;
    }
  }

  std::vector<TableRow> rows(tables[0].rows().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TableRow& r = rows[i];
    r.age = tables[0].rows()[i].age;
    double s_mean = 0.0;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      const TableRow& src = tables[t].rows()[i];
      const double w = weights[t];
      r.m_intercept += w * src.m_intercept;
      r.m_ln_height += w * src.m_ln_height;
      r.m_ln_age += w * src.m_ln_age;
      r.m_spline += w * src.m_spline;
      r.l_intercept += w * src.l_intercept;
      r.l_ln_age += w * src.l_ln_age;
      r.l_ln_height += w * src.l_ln_height;
      r.s_intercept += w * src.s_intercept;
      r.s_ln_age += w * src.s_ln_age;
      r.s_ln_height += w * src.s_ln_height;
      s_mean += w * SAt(src, kSMatchHeight);
    }
    if (unit != weights.end()) {
      const TableRow& src = tables[unit - weights.begin()].rows()[i];
      r.s_intercept = src.s_intercept;
      r.s_ln_age = src.s_ln_age;
      r.s_ln_height = src.s_ln_height;
      r.s_spline = src.s_spline;
    } else {
      if (shared_s_height) r.s_ln_height = tables[0].rows()[i].s_ln_height;
      r.s_spline = std::log(s_mean) -
                   (r.s_intercept + r.s_ln_height * std::log(kSMatchHeight) +
                    r.s_ln_age * std::log(r.age));
    }
  }
  const Sex sex = tables[0].sex();
  if (table_id.empty()) table_id = DefaultId("pooled", group, sex);
  std::map<std::string, std::string> metadata;
  std::string sources;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    sources += fmt::format("{}{}:{}", t ? ";" : "", tables[t].table_id(),
                           weights[t]);
  }
  metadata["pooled_from"] = sources;
  return CoefficientTable(std::move(table_id), std::move(group), sex,
                          std::move(rows), std::move(metadata));
}

CoefficientTable BlendMedianTable(const CoefficientTable& group_table,
                                  const CoefficientTable& privileged_table,
                                  double phi, const CoefficientTable& ls_source,
                                  std::string group, std::string table_id) {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    throw ConfigError(kModule, fmt::format("phi {} outside [0, 1]", phi));
  }
  RequireSameGrid(group_table, privileged_table);
  RequireSameGrid(group_table, ls_source);
  const auto& rk = group_table.rows();
  const auto& rp = privileged_table.rows();
  const double offset = (rp[0].m_intercept + rp[0].m_spline) -
                        (rk[0].m_intercept + rk[0].m_spline);
  for (std::size_t i = 0; i < rk.size(); ++i) {
    const double d = (rp[i].m_intercept + rp[i].m_spline) -
                     (rk[i].m_intercept + rk[i].m_spline);
    if (rp[i].m_ln_height != rk[i].m_ln_height ||
        rp[i].m_ln_age != rk[i].m_ln_age || std::abs(d - offset) > 1e-12) {
      throw DataError(kModule,
                      fmt::format("median ratio of '{}' to '{}' is not "
                                  "constant (row {}); blend is not "
                                  "representable",
                                  privileged_table.table_id(),
                                  group_table.table_id(), i + 1));
    }
  }
  // M_k (1 + phi (e^c - 1)) as a log-offset on the intercept.
  const double shift = std::log1p(phi * std::expm1(offset));
  std::vector<TableRow> rows = ls_source.rows();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].m_intercept = rk[i].m_intercept + shift;
    rows[i].m_ln_height = rk[i].m_ln_height;
    rows[i].m_ln_age = rk[i].m_ln_age;
    rows[i].m_spline = rk[i].m_spline;
  }
  const Sex sex = group_table.sex();
  if (table_id.empty()) table_id = DefaultId("blend", group, sex);
  std::map<std::string, std::string> metadata = {
      {"blend_group", group_table.table_id()},
      {"blend_privileged", privileged_table.table_id()},
      {"blend_phi", fmt::format("{}", phi)},
      {"blend_ls_source", ls_source.table_id()},
  };
  return CoefficientTable(std::move(table_id), std::move(group), sex,
                          std::move(rows), std::move(metadata));
}

CoefficientTable MakeSyntheticTable(std::string group, Sex sex,
                                    double median_scale,
                                    std::string table_id) {
  if (!(median_scale > 0.0) || !std::isfinite(median_scale)) {
    throw ConfigError(kModule, "median_scale must be positive");
  }
  const bool male = sex == Sex::kMale;
  const double log_scale = std::log(median_scale);
  std::vector<TableRow> rows;
  for (double age = kGridMinAge; age <= kGridMaxAge; age += 1.0) {
    TableRow r;
    r.age = age;
    r.m_intercept = (male ? -10.34 : -9.60) + log_scale;
    r.m_ln_height = male ? 2.22 : 2.12;
    r.m_ln_age = male ? 0.057 : -0.027;
    // Quadratic decline after 25, plateau before.
    const double years = std::max(0.0, age - 25.0);
    r.m_spline = -(male ? 1.7e-4 : 1.6e-4) * years * years;
    r.s_intercept = male ? -2.33 : -2.38;
    r.s_ln_age = male ? 0.080 : 0.077;
    r.s_spline = 0.0;
    r.l_intercept = male ? 1.23 : 1.21;
    r.l_ln_age = 0.0;
    rows.push_back(r);
  }
  if (table_id.empty()) table_id = DefaultId("synthetic", group, sex);
  return CoefficientTable(std::move(table_id), std::move(group), sex,
                          std::move(rows),
                          {{"median_scale", fmt::format("{}", median_scale)}});
}

CoefficientTable MakeNaiveTable(Sex sex, double median, double s, double l,
                                std::string table_id) {
  if (!(median > 0.0) || !(s > 0.0)) {
    throw ConfigError(kModule, "naive table needs positive median and S");
  }
  std::vector<TableRow> rows;
  for (double age = kGridMinAge; age <= kGridMaxAge; age += 1.0) {
    TableRow r;
    r.age = age;
    r.m_intercept = std::log(median);
    r.s_intercept = std::log(s);
    r.l_intercept = l;
    rows.push_back(r);
  }
  if (table_id.empty()) table_id = DefaultId("synthetic", "naive", sex);
  return CoefficientTable(std::move(table_id), "naive", sex, std::move(rows));
}

TableSet MakeSyntheticTableSet() {
  const std::vector<std::pair<std::string, double>> groups = {
      {"White", 1.0}, {"Black", 0.86}, {"Asian", 0.90}, {"Other", 0.94}};
  TableSet set;
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    std::vector<CoefficientTable> members;
    for (const auto& [label, scale] : groups) {
      members.push_back(MakeSyntheticTable(label, sex, scale));
      set.Add(members.back());
    }
    const std::vector<double> weights(members.size(), 1.0 / members.size());
    set.Add(BuildPooledTable(members, weights, "pooled",
                               DefaultId("synthetic", "pooled", sex)));
    set.Add(MakeNaiveTable(sex, sex == Sex::kMale ? 3.6 : 2.7));
  }
  return set;
}

}  // namespace spiro
