#include "spiro/csv.h"

#include <charconv>
#include <cmath>
#include <fmt/format.h>

#include "spiro/error.h"

namespace spiro {

std::optional<std::size_t> CsvDocument::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::string_view Trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool was_quoted = false;  // quoted content keeps its edge whitespace
  auto finish = [&] {
    fields.push_back(was_quoted ? current : std::string(Trim(current)));
    current.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      finish();
    } else {
      current.push_back(c);
    }
  }
  finish();
  return fields;
}

CsvDocument ReadCsv(std::istream& in, std::string_view module, bool strict) {
  CsvDocument doc;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // A UTF-8 byte order mark may precede the first line.
    if (!have_header && doc.comments.empty() && line.starts_with("\xEF\xBB\xBF")) {
      line.erase(0, 3);
    }
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty()) continue;
    if (!have_header) {
      if (trimmed.front() == '#') {
        doc.comments.emplace_back(Trim(trimmed.substr(1)));
        continue;
      }
      doc.header = SplitCsvLine(trimmed);
      have_header = true;
      continue;
    }
    auto fields = SplitCsvLine(line);
    if (strict && fields.size() != doc.header.size()) {
      throw LoadError(std::string(module), doc.rows.size() + 1,
                      fmt::format("malformed row {}: expected {} fields, got {}",
                                  doc.rows.size() + 1, doc.header.size(),
                                  fields.size()));
    }
    doc.rows.push_back(std::move(fields));
  }
  if (!have_header) {
    throw DataError(std::string(module), "missing CSV header row");
  }
  return doc;
}

std::string CsvEscape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n") != std::string_view::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << CsvEscape(fields[i]);
  }
  out << '\n';
}

std::optional<double> ParseDouble(std::string_view text) {
  text = Trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string FormatDouble(double value) { return fmt::format("{}", value); }

}  // namespace spiro
