#include "spiro/cohort.h"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spiro/csv.h"
#include "spiro/error.h"

namespace spiro {
namespace {

constexpr char kModule[] = "cohort";

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::optional<bool> ParseBool(std::string_view text, bool* malformed) {
  const std::string v = Lower(Trim(text));
  *malformed = false;
  if (v.empty()) return std::nullopt;
  if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
  if (v == "0" || v == "false" || v == "no" || v == "n") return false;
  *malformed = true;
  return std::nullopt;
}

// Thrown internally to reject one row.
struct RowReject {
  std::string reason;
};

class RowReader {
 public:
  RowReader(const CsvDocument& doc, const std::vector<std::string>& row)
      : doc_(doc), row_(row) {}

  std::optional<std::string_view> Text(const std::string& column) const {
    if (column.empty()) return std::nullopt;
    const auto idx = doc_.Column(column);
    if (!idx) return std::nullopt;
    const std::string_view v = Trim(row_[*idx]);
    if (v.empty()) return std::nullopt;
    return v;
  }

  std::optional<double> Number(const std::string& column,
                               std::string_view field) const {
    const auto text = Text(column);
    if (!text) return std::nullopt;
    const auto value = ParseDouble(*text);
    if (!value) {
      throw RowReject{fmt::format("unparseable {} '{}'", field, *text)};
    }
    return value;
  }

  std::optional<bool> Flag(const std::string& column,
                           std::string_view field) const {
    const auto text = Text(column);
    if (!text) return std::nullopt;
    bool malformed = false;
    const auto value = ParseBool(*text, &malformed);
    if (malformed) {
      throw RowReject{fmt::format("unparseable {} '{}'", field, *text)};
    }
    return value;
  }

 private:
  const CsvDocument& doc_;
  const std::vector<std::string>& row_;
};

std::optional<double> PositiveVolume(const RowReader& reader,
                                     const std::string& column,
                                     std::string_view field) {
  const auto v = reader.Number(column, field);
  if (v && !(*v > 0.0)) {
    throw RowReject{fmt::format("non-positive volume: {} = {}", field, *v)};
  }
  return v;
}

ColumnSchema ResolveSchema(const ColumnSchema& schema, const CsvDocument& doc) {
  ColumnSchema out = schema;
  if (!schema.auto_prefixes) return out;
  for (const auto& name : doc.header) {
    if (name.starts_with("symptom_")) {
      out.symptoms.try_emplace(name.substr(8), name);
    } else if (name.starts_with("outcome_")) {
      out.binary_outcomes.try_emplace(name.substr(8), name);
    } else if (name.starts_with("event_")) {
      const std::string outcome = name.substr(6);
      const std::string followup = "followup_" + outcome;
      if (doc.Column(followup)) {
        out.time_to_event.try_emplace(outcome,
                                      ColumnSchema::EventColumns{name, followup});
      }
    }
  }
  return out;
}

std::string Flag01(const std::optional<bool>& v) {
  if (!v) return "";
  return *v ? "1" : "0";
}

std::string Num(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string();
}

}  // namespace

OutcomeRecord OutcomeRecord::TimeToEvent(bool event, double followup_years) {
  if (!(followup_years >= 0.0)) {
    throw DataError(kModule, "followup_years must be >= 0");
  }
  return {OutcomeKind::kTimeToEvent, false, event, followup_years};
}

std::optional<bool> OutcomeRecord::AtHorizon(
    std::optional<double> horizon_years) const {
  if (kind == OutcomeKind::kBinary) return value;
  if (!horizon_years) return event;
  if (event && followup_years <= *horizon_years) return true;
  if (followup_years >= *horizon_years) return false;
  return std::nullopt;
}

ColumnSchema ColumnSchema::FromJsonText(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(kModule, fmt::format("invalid schema JSON: {}", e.what()));
  }
  ColumnSchema s;
  try {
    if (j.contains("fields")) {
      const std::map<std::string, std::string*> fields = {
          {"id", &s.id},
          {"age", &s.age},
          {"height", &s.height},
          {"sex", &s.sex},
          {"race_ethnicity", &s.race_ethnicity},
          {"group", &s.group},
          {"fev1", &s.fev1},
          {"fvc", &s.fvc},
          {"smoker_ever", &s.smoker_ever},
          {"respiratory_dx", &s.respiratory_dx},
          {"weight", &s.weight},
          {"lf_ideal", &s.lf_ideal},
          {"deficit", &s.deficit},
      };
      for (const auto& [key, value] : j.at("fields").items()) {
        auto it = fields.find(key);
        if (it == fields.end()) {
          throw ConfigError(kModule,
                            fmt::format("unknown schema field '{}'", key));
        }
        *it->second = value.get<std::string>();
      }
    }
    if (j.contains("symptoms")) {
      s.symptoms = j.at("symptoms").get<std::map<std::string, std::string>>();
    }
    if (j.contains("binary_outcomes")) {
      s.binary_outcomes =
          j.at("binary_outcomes").get<std::map<std::string, std::string>>();
    }
    if (j.contains("time_to_event")) {
      for (const auto& [name, cols] : j.at("time_to_event").items()) {
        s.time_to_event[name] = {cols.at("event").get<std::string>(),
                                 cols.at("followup").get<std::string>()};
      }
    }
    if (j.contains("auto_prefixes")) {
      s.auto_prefixes = j.at("auto_prefixes").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(kModule, fmt::format("invalid schema: {}", e.what()));
  }
  return s;
}

ColumnSchema ColumnSchema::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(kModule,
                      fmt::format("cannot open schema '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJsonText(buffer.str());
}

IngestResult Ingest(std::istream& in, const ColumnSchema& base_schema,
                    const IngestOptions& options) {
  const CsvDocument doc = ReadCsv(in, kModule, /*strict=*/false);
  const ColumnSchema schema = ResolveSchema(base_schema, doc);

  for (const auto* column :
       {&schema.id, &schema.age, &schema.height, &schema.sex}) {
    if (!doc.Column(*column)) {
      throw DataError(kModule,
                      fmt::format("schema error: missing mandatory column '{}'",
                                  *column));
    }
  }
  const bool has_category = doc.Column(schema.race_ethnicity).has_value();
  const bool has_group = doc.Column(schema.group).has_value();
  if (!has_category && !has_group) {
    throw DataError(kModule,
                    fmt::format("schema error: missing mandatory column '{}'",
                                schema.race_ethnicity));
  }

  IngestResult result;
  result.rows_read = doc.rows.size();
  for (const char* field :
       {"fev1", "fvc", "smoker_ever", "respiratory_dx", "weight"}) {
    result.missing_counts[field] = 0;
  }

  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::size_t row_number = r + 1;
    std::string id;
    if (const auto idx = doc.Column(schema.id); idx && *idx < row.size()) {
      id = std::string(Trim(row[*idx]));
    }
    if (row.size() != doc.header.size()) {
      result.rejected.push_back(
          {row_number, id,
           fmt::format("malformed row: expected {} fields, got {}",
                       doc.header.size(), row.size())});
      continue;
    }
    const RowReader reader(doc, row);
    try {
      Participant p;
      if (id.empty()) throw RowReject{"missing id"};
      p.id = id;

      const auto age = reader.Number(schema.age, "age");
      if (!age) throw RowReject{"missing age"};
      p.age = *age;
      const auto height = reader.Number(schema.height, "height");
      if (!height) throw RowReject{"missing height"};
      if (!(*height > 0.0)) {
        throw RowReject{fmt::format("non-positive height {}", *height)};
      }
      p.height = *height;
      const auto sex_text = reader.Text(schema.sex);
      const auto sex = sex_text ? ParseSex(*sex_text) : std::nullopt;
      if (!sex) {
        throw RowReject{fmt::format("unparseable sex '{}'",
                                    sex_text.value_or(""))};
      }
      p.sex = *sex;

      if (const auto v = reader.Text(schema.race_ethnicity)) {
        p.race_ethnicity = std::string(*v);
      }
      if (const auto v = reader.Text(schema.group)) p.group = std::string(*v);
      if (p.race_ethnicity.empty() && p.group.empty()) {
        throw RowReject{"missing race_ethnicity"};
      }
      if (p.race_ethnicity.empty()) p.race_ethnicity = p.group;

      p.fev1 = PositiveVolume(reader, schema.fev1, "fev1");
      p.fvc = PositiveVolume(reader, schema.fvc, "fvc");
      p.smoker_ever = reader.Flag(schema.smoker_ever, "smoker_ever");
      p.respiratory_dx = reader.Flag(schema.respiratory_dx, "respiratory_dx");
      p.weight = reader.Number(schema.weight, "weight");
      if (p.weight && *p.weight < 0.0) {
        throw RowReject{fmt::format("negative weight {}", *p.weight)};
      }
      for (const auto& [name, column] : schema.symptoms) {
        if (const auto v = reader.Flag(column, "symptom " + name)) {
          p.symptoms[name] = *v;
        }
      }
      for (const auto& [name, column] : schema.binary_outcomes) {
        if (const auto v = reader.Flag(column, "outcome " + name)) {
          p.outcomes[name] = OutcomeRecord::Binary(*v);
        }
      }
      for (const auto& [name, cols] : schema.time_to_event) {
        const auto event = reader.Flag(cols.event, "event " + name);
        const auto followup = reader.Number(cols.followup, "followup " + name);
        if (event && followup) {
          if (*followup < 0.0) {
            throw RowReject{fmt::format("negative followup for {}", name)};
          }
          p.outcomes[name] = OutcomeRecord::TimeToEvent(*event, *followup);
        }
      }
      const auto lf_ideal = reader.Number(schema.lf_ideal, "lf_ideal");
      const auto deficit = reader.Number(schema.deficit, "deficit");
      if (lf_ideal && deficit) p.provenance = SynthProvenance{*lf_ideal, *deficit};

      if (options.adult_filter &&
          (p.age < options.min_age || p.age > options.max_age)) {
        result.excluded.push_back(
            {row_number, p.id,
             fmt::format("age {} outside adult range [{}, {}]", p.age,
                         options.min_age, options.max_age)});
        continue;
      }
      if (!p.fev1) ++result.missing_counts["fev1"];
      if (!p.fvc) ++result.missing_counts["fvc"];
      if (!p.smoker_ever) ++result.missing_counts["smoker_ever"];
      if (!p.respiratory_dx) ++result.missing_counts["respiratory_dx"];
      if (!p.weight) ++result.missing_counts["weight"];
      result.participants.push_back(std::move(p));
    } catch (const RowReject& reject) {
      result.rejected.push_back({row_number, id, reject.reason});
    }
  }
  return result;
}

IngestResult IngestFile(const std::filesystem::path& path,
                        const ColumnSchema& schema,
                        const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(kModule,
                    fmt::format("cannot open cohort '{}'", path.string()));
  }
  return Ingest(in, schema, options);
}

GroupMapping::GroupMapping(std::vector<GroupRule> rules,
                           std::optional<std::string> default_group)
    : rules_(std::move(rules)), default_group_(std::move(default_group)) {
  compiled_.reserve(rules_.size());
  for (const auto& rule : rules_) {
    try {
      compiled_.emplace_back(rule.pattern, std::regex::ECMAScript |
                                               std::regex::icase |
                                               std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError(kModule, fmt::format("invalid mapping pattern '{}': {}",
                                             rule.pattern, e.what()));
    }
  }
}

GroupMapping GroupMapping::NhanesDefault() {
  return GroupMapping({
      {"1|mexican[ -]american", "White"},
      {"2|other hispanic", "White"},
      {"3|non-hispanic white|nh[ -]white", "White"},
      {"4|non-hispanic black|nh[ -]black", "Black"},
      {"6|non-hispanic asian|nh[ -]asian", "Asian"},
      {"5|7|other race.*|other/multiracial|multiracial|other", "Other"},
      {"hispanic", "White"},
  });
}

GroupMapping GroupMapping::FromJsonText(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<GroupRule> rules;
    for (const auto& rule : j.at("rules")) {
      rules.push_back({rule.at("pattern").get<std::string>(),
                       rule.at("group").get<std::string>()});
    }
    std::optional<std::string> fallback;
    if (j.contains("default") && !j.at("default").is_null()) {
      fallback = j.at("default").get<std::string>();
    }
    return GroupMapping(std::move(rules), std::move(fallback));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(kModule, fmt::format("invalid group mapping: {}", e.what()));
  }
}

GroupMapping GroupMapping::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(kModule,
                      fmt::format("cannot open mapping '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJsonText(buffer.str());
}

std::optional<std::string> GroupMapping::Resolve(
    std::string_view category) const {
  const std::string value(Trim(category));
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (std::regex_match(value, compiled_[i])) return rules_[i].group;
  }
  return default_group_;
}

MappedCohort MapGroups(Cohort cohort, const GroupMapping& mapping) {
  MappedCohort out;
  std::set<std::string> unmapped;
  for (auto& p : cohort) {
    ++out.category_counts[p.race_ethnicity];
    const auto group = mapping.Resolve(p.race_ethnicity);
    if (!group) {
      unmapped.insert(p.race_ethnicity);
      continue;
    }
    p.group = *group;
    ++out.group_counts[p.group];
  }
  if (!unmapped.empty()) {
    std::string list;
    for (const auto& c : unmapped) {
      if (!list.empty()) list += ", ";
      list += "'" + c + "'";
    }
    throw DataError(kModule,
                    fmt::format("unmapped race/ethnicity categories: {}", list));
  }
  out.participants = std::move(cohort);
  return out;
}

bool IsAtRisk(const Participant& p) {
  if (p.smoker_ever.value_or(false)) return true;
  if (p.respiratory_dx.value_or(false)) return true;
  return std::any_of(p.symptoms.begin(), p.symptoms.end(),
                     [](const auto& kv) { return kv.second; });
}

Cohort FilterAtRisk(const Cohort& cohort, AtRiskSummary* summary) {
  Cohort out;
  AtRiskSummary s;
  s.input = cohort.size();
  for (const auto& p : cohort) {
    if (!p.smoker_ever) ++s.missing_smoker_ever;
    if (!p.respiratory_dx) ++s.missing_respiratory_dx;
    if (p.symptoms.empty()) ++s.missing_symptoms;
    if (IsAtRisk(p)) out.push_back(p);
  }
  s.retained = out.size();
  s.inclusion_rate =
      s.input ? static_cast<double>(s.retained) / static_cast<double>(s.input)
              : 0.0;
  if (summary) *summary = s;
  return out;
}

void WriteCohortCsv(std::ostream& out, const Cohort& cohort) {
  std::set<std::string> symptoms, binary, timed;
  bool any_weight = false, any_fvc = false, any_provenance = false;
  for (const auto& p : cohort) {
    for (const auto& [name, v] : p.symptoms) symptoms.insert(name);
    for (const auto& [name, o] : p.outcomes) {
      (o.kind == OutcomeKind::kBinary ? binary : timed).insert(name);
    }
    any_weight |= p.weight.has_value();
    any_fvc |= p.fvc.has_value();
    any_provenance |= p.provenance.has_value();
  }
  std::vector<std::string> header = {"id",  "age",   "height",
                                     "sex", "race_ethnicity", "group",
                                     "fev1"};
  if (any_fvc) header.push_back("fvc");
  header.push_back("smoker_ever");
  header.push_back("respiratory_dx");
  if (any_weight) header.push_back("weight");
  for (const auto& s : symptoms) header.push_back("symptom_" + s);
  for (const auto& s : binary) header.push_back("outcome_" + s);
  for (const auto& s : timed) {
    header.push_back("event_" + s);
    header.push_back("followup_" + s);
  }
  if (any_provenance) {
    header.push_back("lf_ideal");
    header.push_back("deficit");
  }
  WriteCsvRow(out, header);

  for (const auto& p : cohort) {
    std::vector<std::string> f = {p.id,
                                  FormatDouble(p.age),
                                  FormatDouble(p.height),
                                  std::string(ToString(p.sex)),
                                  p.race_ethnicity,
                                  p.group,
                                  Num(p.fev1)};
    if (any_fvc) f.push_back(Num(p.fvc));
    f.push_back(Flag01(p.smoker_ever));
    f.push_back(Flag01(p.respiratory_dx));
    if (any_weight) f.push_back(Num(p.weight));
    for (const auto& s : symptoms) {
      auto it = p.symptoms.find(s);
      f.push_back(it == p.symptoms.end() ? "" : (it->second ? "1" : "0"));
    }
    for (const auto& s : binary) {
      auto it = p.outcomes.find(s);
      f.push_back(it == p.outcomes.end() ? "" : (it->second.value ? "1" : "0"));
    }
    for (const auto& s : timed) {
      auto it = p.outcomes.find(s);
      if (it == p.outcomes.end()) {
        f.push_back("");
        f.push_back("");
      } else {
        f.push_back(it->second.event ? "1" : "0");
        f.push_back(FormatDouble(it->second.followup_years));
      }
    }
    if (any_provenance) {
      f.push_back(p.provenance ? FormatDouble(p.provenance->lf_ideal) : "");
      f.push_back(p.provenance ? FormatDouble(p.provenance->deficit) : "");
    }
    WriteCsvRow(out, f);
  }
}

}  // namespace spiro
