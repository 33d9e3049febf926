#include "spiro/table_set.h"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>

#include "spiro/error.h"

namespace spiro {
namespace {
constexpr char kModule[] = "ref_engine";
}  // namespace

TableSet TableSet::LoadDirectory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError(kModule,
                    fmt::format("table directory '{}' not found", dir.string()));
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  TableSet set;
  for (const auto& file : files) set.Add(CoefficientTable::LoadFile(file));
  if (set.empty()) {
    throw DataError(kModule,
                    fmt::format("no table files in '{}'", dir.string()));
  }
  return set;
}

void TableSet::Add(CoefficientTable table) {
  auto key = std::make_pair(table.group(), table.sex());
  if (tables_.contains(key)) {
    throw DataError(kModule, fmt::format("duplicate table for group '{}', {}",
                                         key.first, ToString(key.second)));
  }
  tables_.emplace(std::move(key), std::move(table));
}

const CoefficientTable* TableSet::Find(std::string_view group, Sex sex) const {
  auto it = tables_.find(std::make_pair(std::string(group), sex));
  return it == tables_.end() ? nullptr : &it->second;
}

const CoefficientTable& TableSet::Get(std::string_view group, Sex sex) const {
  const CoefficientTable* table = Find(group, sex);
  if (!table) {
    throw DataError(kModule, fmt::format("no table for group '{}', {}", group,
                                         ToString(sex)));
  }
  return *table;
}

bool TableSet::HasGroup(std::string_view group) const {
  return std::any_of(tables_.begin(), tables_.end(),
                     [&](const auto& kv) { return kv.first.first == group; });
}

std::vector<std::string> TableSet::Groups() const {
  std::vector<std::string> groups;
  for (const auto& [key, table] : tables_) {
    if (groups.empty() || groups.back() != key.first) {
      groups.push_back(key.first);
    }
  }
  return groups;
}

void TableSet::WriteDirectory(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [key, table] : tables_) {
    const auto path =
        dir / fmt::format("{}_{}.csv", key.first, ToString(key.second));
    std::ofstream out(path);
    if (!out) {
      throw DataError(kModule,
                      fmt::format("cannot write '{}'", path.string()));
    }
    table.Write(out);
  }
}

}  // namespace spiro
