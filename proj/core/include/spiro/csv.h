#ifndef SPIRO_CSV_H_
#define SPIRO_CSV_H_

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace spiro {

// Minimal RFC 4180 reader: quoted fields with doubled quotes, no embedded
// newlines. Lines starting with '#' before the header are collected as
// comments; blank lines are skipped.
struct CsvDocument {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or nullopt.
  std::optional<std::size_t> Column(std::string_view name) const;
};

std::vector<std::string> SplitCsvLine(std::string_view line);

// With `strict`, throws LoadError when a row has a different field count
// than the header; otherwise such rows are kept for the caller to reject.
CsvDocument ReadCsv(std::istream& in, std::string_view module,
                    bool strict = true);

// Quotes a field only when it contains a comma, quote, or whitespace edge.
std::string CsvEscape(std::string_view field);

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& fields);

// Strict numeric parse of a whole (trimmed) field.
std::optional<double> ParseDouble(std::string_view text);

// Round-trippable text for a double (shortest representation that parses
// back to the same value).
std::string FormatDouble(double value);

std::string_view Trim(std::string_view text);

}  // namespace spiro

#endif  // SPIRO_CSV_H_
