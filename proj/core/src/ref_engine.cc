#include "spiro/ref_engine.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

#include "spiro/csv.h"
#include "spiro/error.h"

namespace spiro {
namespace {

constexpr char kModule[] = "ref_engine";

using RowField = double TableRow::*;

struct ColumnDef {
  const char* name;
  RowField field;
  bool required;
};

constexpr std::array<ColumnDef, 12> kColumns = {{
    {"age", &TableRow::age, true},
    {"m_intercept", &TableRow::m_intercept, true},
    {"m_ln_height", &TableRow::m_ln_height, true},
    {"m_ln_age", &TableRow::m_ln_age, true},
    {"m_spline", &TableRow::m_spline, true},
    {"s_intercept", &TableRow::s_intercept, true},
    {"s_ln_age", &TableRow::s_ln_age, true},
    {"s_spline", &TableRow::s_spline, true},
    {"l_intercept", &TableRow::l_intercept, true},
    {"l_ln_age", &TableRow::l_ln_age, true},
    {"s_ln_height", &TableRow::s_ln_height, false},
    {"l_ln_height", &TableRow::l_ln_height, false},
}};

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

LmsParams EvaluateRow(const TableRow& r, double age, double height) {
  const double ln_h = std::log(height);
  const double ln_a = std::log(age);
  LmsParams out;
  out.median = std::exp(r.m_intercept + r.m_ln_height * ln_h +
                        r.m_ln_age * ln_a + r.m_spline);
  out.s = std::exp(r.s_intercept + r.s_ln_height * ln_h + r.s_ln_age * ln_a +
                   r.s_spline);
  out.l = r.l_intercept + r.l_ln_height * ln_h + r.l_ln_age * ln_a;
  return out;
}

void ValidateRow(const TableRow& row, std::size_t index) {
  for (const auto& col : kColumns) {
    if (!std::isfinite(row.*(col.field))) {
      throw LoadError(kModule, index,
                      fmt::format("non-finite {} at row {}", col.name, index));
    }
  }
  if (row.age < kMinTableAge || row.age > kMaxTableAge) {
    throw LoadError(kModule, index,
                    fmt::format("age {} outside [{}, {}] at row {}", row.age,
                                kMinTableAge, kMaxTableAge, index));
  }
  for (double height : {kMinCheckHeight, kMaxCheckHeight}) {
    const LmsParams lms = EvaluateRow(row, row.age, height);
    if (!(lms.s > 0.0) || !std::isfinite(lms.s)) {
      throw LoadError(kModule, index,
                      fmt::format("non-positive S at row {}", index));
    }
    if (!(lms.median > 0.0) || !std::isfinite(lms.median)) {
      throw LoadError(kModule, index,
                      fmt::format("non-positive median at row {}", index));
    }
    if (!std::isfinite(lms.l)) {
      throw LoadError(kModule, index,
                      fmt::format("non-finite L at row {}", index));
    }
  }
}

}  // namespace

std::string_view ToString(Sex sex) {
  return sex == Sex::kMale ? "male" : "female";
}

std::optional<Sex> ParseSex(std::string_view text) {
  const std::string v = Lower(Trim(text));
  if (v == "male" || v == "m" || v == "1") return Sex::kMale;
  if (v == "female" || v == "f" || v == "2") return Sex::kFemale;
  return std::nullopt;
}

CoefficientTable::CoefficientTable(std::string table_id, std::string group,
                                   Sex sex, std::vector<TableRow> rows,
                                   std::map<std::string, std::string> metadata)
    : table_id_(std::move(table_id)),
      group_(std::move(group)),
      sex_(sex),
      rows_(std::move(rows)),
      metadata_(std::move(metadata)) {
  if (table_id_.empty()) throw DataError(kModule, "table_id must be non-empty");
  if (group_.empty()) throw DataError(kModule, "group must be non-empty");
  if (rows_.empty()) throw DataError(kModule, "table has no rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const std::size_t index = i + 1;
    ValidateRow(rows_[i], index);
    if (i > 0 && !(rows_[i].age > rows_[i - 1].age)) {
      throw LoadError(kModule, index,
                      fmt::format("non-monotone age grid at row {}", index));
    }
  }
  if (Lower(group_) == "naive" && !IsConstantMedian()) {
    throw DataError(kModule,
                    "naive table must have zero height/age median "
                    "coefficients and a constant median");
  }
}

bool CoefficientTable::IsConstantMedian() const {
  const double level = rows_.front().m_intercept + rows_.front().m_spline;
  return std::all_of(rows_.begin(), rows_.end(), [&](const TableRow& r) {
    return r.m_ln_height == 0.0 && r.m_ln_age == 0.0 &&
           r.m_intercept + r.m_spline == level;
  });
}

TableRow CoefficientTable::RowAt(double age) const {
  if (!std::isfinite(age) || !Covers(age)) {
    throw DataError(kModule,
                    fmt::format("age {} outside table '{}' grid [{}, {}]", age,
                                table_id_, min_age(), max_age()));
  }
  auto upper = std::upper_bound(
      rows_.begin(), rows_.end(), age,
      [](double a, const TableRow& r) { return a < r.age; });
  if (upper == rows_.end()) return rows_.back();
  const TableRow& hi = *upper;
  const TableRow& lo = *(upper - 1);
  const double t = (age - lo.age) / (hi.age - lo.age);
  // (1 - t) * a + t * b reproduces the knot values exactly at t = 0 and t = 1;
  // equal neighbours are copied so constant columns stay bit-exact.
  TableRow out;
  for (const auto& col : kColumns) {
    const double a = lo.*(col.field);
    const double b = hi.*(col.field);
    out.*(col.field) = a == b ? a : (1.0 - t) * a + t * b;
  }
  out.age = age;
  return out;
}

LmsParams CoefficientTable::Predict(double age, double height) const {
  if (!(height > 0.0) || !std::isfinite(height)) {
    throw DomainError(kModule, fmt::format("height must be positive, got {}",
                                           height));
  }
  return EvaluateRow(RowAt(age), age, height);
}

CoefficientTable CoefficientTable::Load(std::istream& in) {
  const CsvDocument doc = ReadCsv(in, kModule);

  std::map<std::string, std::string> metadata;
  for (const auto& comment : doc.comments) {
    const auto eq = comment.find('=');
    if (eq == std::string::npos) continue;
    metadata[std::string(Trim(comment.substr(0, eq)))] =
        std::string(Trim(comment.substr(eq + 1)));
  }
  auto take = [&](const std::string& key) {
    auto it = metadata.find(key);
    if (it == metadata.end() || it->second.empty()) {
      throw DataError(kModule, fmt::format("missing '# {}=' header line", key));
    }
    std::string value = it->second;
    metadata.erase(it);
    return value;
  };
  const std::string group = take("group");
  const std::string sex_text = take("sex");
  const std::string table_id = take("table_id");
  const auto sex = ParseSex(sex_text);
  if (!sex) {
    throw DataError(kModule, fmt::format("invalid sex '{}'", sex_text));
  }

  std::vector<std::optional<std::size_t>> column_index;
  for (const auto& col : kColumns) {
    auto idx = doc.Column(col.name);
    if (!idx && col.required) {
      throw DataError(kModule, fmt::format("missing column '{}'", col.name));
    }
    column_index.push_back(idx);
  }
  for (const auto& name : doc.header) {
    const bool known =
        std::any_of(kColumns.begin(), kColumns.end(),
                    [&](const ColumnDef& c) { return name == c.name; });
    if (!known) {
      throw DataError(kModule, fmt::format("unknown column '{}'", name));
    }
  }

  std::vector<TableRow> rows;
  rows.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    TableRow row;
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      if (!column_index[c]) continue;
      const std::string& text = doc.rows[r][*column_index[c]];
      const auto value = ParseDouble(text);
      if (!value) {
        throw LoadError(kModule, r + 1,
                        fmt::format("malformed row {}: column '{}' value '{}'",
                                    r + 1, kColumns[c].name, text));
      }
      row.*(kColumns[c].field) = *value;
    }
    rows.push_back(row);
  }
  return CoefficientTable(table_id, group, *sex, std::move(rows),
                          std::move(metadata));
}

CoefficientTable CoefficientTable::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(kModule,
                    fmt::format("cannot open table file '{}'", path.string()));
  }
  try {
    return Load(in);
  } catch (const LoadError& e) {
    throw LoadError(kModule, e.row(),
                    fmt::format("{}: {}", path.string(), e.what()));
  } catch (const DataError& e) {
    throw DataError(kModule, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void CoefficientTable::Write(std::ostream& out) const {
  out << "# group=" << group_ << '\n';
  out << "# sex=" << ToString(sex_) << '\n';
  out << "# table_id=" << table_id_ << '\n';
  for (const auto& [key, value] : metadata_) {
    out << "# " << key << '=' << value << '\n';
  }
  const bool height_terms =
      std::any_of(rows_.begin(), rows_.end(), [](const TableRow& r) {
        return r.s_ln_height != 0.0 || r.l_ln_height != 0.0;
      });
  std::vector<std::string> header;
  for (const auto& col : kColumns) {
    if (col.required || height_terms) header.emplace_back(col.name);
  }
  WriteCsvRow(out, header);
  for (const auto& row : rows_) {
    std::vector<std::string> fields;
    for (const auto& col : kColumns) {
      if (col.required || height_terms) {
        fields.push_back(FormatDouble(row.*(col.field)));
      }
    }
    WriteCsvRow(out, fields);
  }
}

double ZScore(double measured, double median, double l, double s) {
  if (!(measured > 0.0) || !(median > 0.0) || !(s > 0.0)) {
    throw DomainError(kModule,
                      fmt::format("z-score requires positive measured, median "
                                  "and S (got {}, {}, {})",
                                  measured, median, s));
  }
  const double log_ratio = std::log(measured / median);
  if (std::abs(l) < kLambdaLimit) return log_ratio / s;
  // expm1 keeps the small-L branch free of cancellation in (ratio^L - 1).
  return std::expm1(l * log_ratio) / (l * s);
}

double InverseZ(double z, double median, double l, double s) {
  if (!(median > 0.0) || !(s > 0.0) || !std::isfinite(z)) {
    throw DomainError(kModule, "inverse z requires positive median and S");
  }
  if (std::abs(l) < kLambdaLimit) return median * std::exp(s * z);
  const double base = l * s * z;
  if (!(base > -1.0)) {
    throw DomainError(kModule,
                      fmt::format("1 + L*S*z = {} is not positive", 1.0 + base));
  }
  return median * std::exp(std::log1p(base) / l);
}

double PercentPredicted(double measured, double median) {
  if (!(median > 0.0)) {
    throw DomainError(kModule, "percent predicted requires positive median");
  }
  return 100.0 * measured / median;
}

double LowerLimitOfNormal(const LmsParams& lms, double lln_z) {
  return InverseZ(lln_z, lms);
}

ReferenceOutput Evaluate(const CoefficientTable& table,
                         const DemographicInput& x,
                         std::optional<double> measured, double lln_z) {
  const LmsParams lms = table.Predict(x);
  ReferenceOutput out;
  out.median = lms.median;
  out.l_param = lms.l;
  out.s_param = lms.s;
  out.lln = LowerLimitOfNormal(lms, lln_z);
  if (measured) {
    out.z_score = ZScore(*measured, lms);
    out.percent_predicted = PercentPredicted(*measured, lms.median);
  }
  return out;
}

}  // namespace spiro
