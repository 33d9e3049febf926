#ifndef SPIRO_REF_ENGINE_H_
#define SPIRO_REF_ENGINE_H_

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace spiro {

enum class Sex { kMale, kFemale };

std::string_view ToString(Sex sex);

// Accepts "male"/"female", "m"/"f" and the NHANES codes "1"/"2".
std::optional<Sex> ParseSex(std::string_view text);

// 5th percentile of the standard normal, the conventional lower limit of
// normal for spirometry.
inline constexpr double kLlnZ = -1.6449;

// |L| below this uses the log-limit form of the LMS transform.
inline constexpr double kLambdaLimit = 1e-6;

// Admissible age span for any table row, in years.
inline constexpr double kMinTableAge = 3.0;
inline constexpr double kMaxTableAge = 95.0;

// Heights at which every row's S must evaluate positive.
inline constexpr double kMinCheckHeight = 100.0;
inline constexpr double kMaxCheckHeight = 220.0;

struct DemographicInput {
  double age = 0.0;     // years, fractional
  double height = 0.0;  // cm
  Sex sex = Sex::kMale;
  std::string group;
};

// One age knot of an LMS table. Between knots every column is interpolated
// linearly in age; the reference at (age, height) is then
//   M = exp(m_intercept + m_ln_height ln h + m_ln_age ln a + m_spline)
//   S = exp(s_intercept + s_ln_height ln h + s_ln_age ln a + s_spline)
//   L = l_intercept + l_ln_height ln h + l_ln_age ln a
struct TableRow {
  double age = 0.0;
  double m_intercept = 0.0;
  double m_ln_height = 0.0;
  double m_ln_age = 0.0;
  double m_spline = 0.0;
  double s_intercept = 0.0;
  double s_ln_age = 0.0;
  double s_spline = 0.0;
  double l_intercept = 0.0;
  double l_ln_age = 0.0;
  // Optional columns; absent from most tables.
  double s_ln_height = 0.0;
  double l_ln_height = 0.0;
};

struct LmsParams {
  double median = 0.0;
  double l = 0.0;
  double s = 0.0;
};

struct ReferenceOutput {
  double median = 0.0;
  double l_param = 0.0;
  double s_param = 0.0;
  double lln = 0.0;
  std::optional<double> z_score;
  std::optional<double> percent_predicted;
};

// An immutable, validated LMS reference for one (group, sex).
class CoefficientTable {
 public:
  // Validates every invariant; throws LoadError naming the offending row.
  CoefficientTable(std::string table_id, std::string group, Sex sex,
                   std::vector<TableRow> rows,
                   std::map<std::string, std::string> metadata = {});

  // Parses the table file format (comment header + CSV body).
  static CoefficientTable Load(std::istream& in);
  static CoefficientTable LoadFile(const std::filesystem::path& path);

  // Writes the table file format; Load(Write(t)) reproduces t exactly.
  void Write(std::ostream& out) const;

  const std::string& table_id() const { return table_id_; }
  const std::string& group() const { return group_; }
  Sex sex() const { return sex_; }
  const std::vector<TableRow>& rows() const { return rows_; }
  const std::map<std::string, std::string>& metadata() const {
    return metadata_;
  }

  double min_age() const { return rows_.front().age; }
  double max_age() const { return rows_.back().age; }
  bool Covers(double age) const { return age >= min_age() && age <= max_age(); }

  // True when the median does not vary with height or age.
  bool IsConstantMedian() const;

  // Interpolated row at `age`. Throws DataError outside the grid.
  TableRow RowAt(double age) const;

  // Median, L and S at the given covariates. No extrapolation beyond the
  // grid; throws DataError for ages outside it and DomainError for
  // non-positive height.
  LmsParams Predict(double age, double height) const;
  LmsParams Predict(const DemographicInput& x) const {
    return Predict(x.age, x.height);
  }

 private:
  std::string table_id_;
  std::string group_;
  Sex sex_;
  std::vector<TableRow> rows_;
  std::map<std::string, std::string> metadata_;
};

// LMS z-score ((measured / median)^L - 1) / (L S), with the limit
// ln(measured / median) / S for |L| < kLambdaLimit. Throws DomainError for
// non-positive measured, median or S.
double ZScore(double measured, double median, double l, double s);
inline double ZScore(double measured, const LmsParams& lms) {
  return ZScore(measured, lms.median, lms.l, lms.s);
}

// Volume whose z-score is `z`. Throws DomainError when 1 + L S z <= 0.
double InverseZ(double z, double median, double l, double s);
inline double InverseZ(double z, const LmsParams& lms) {
  return InverseZ(z, lms.median, lms.l, lms.s);
}

// 100 * measured / median. Throws DomainError for non-positive median.
double PercentPredicted(double measured, double median);

double LowerLimitOfNormal(const LmsParams& lms, double lln_z = kLlnZ);

// Full reference output, with z-score and percent predicted when a
// measurement is supplied.
ReferenceOutput Evaluate(const CoefficientTable& table,
                         const DemographicInput& x,
                         std::optional<double> measured = std::nullopt,
                         double lln_z = kLlnZ);

}  // namespace spiro

#endif  // SPIRO_REF_ENGINE_H_
