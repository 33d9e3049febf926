#ifndef SPIRO_TABLE_SET_H_
#define SPIRO_TABLE_SET_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spiro/ref_engine.h"

namespace spiro {

// Coefficient tables keyed by (group label, sex). Group labels compare
// exactly.
class TableSet {
 public:
  TableSet() = default;

  // Loads every *.csv file in `dir`. Throws DataError on duplicates.
  static TableSet LoadDirectory(const std::filesystem::path& dir);

  void Add(CoefficientTable table);

  const CoefficientTable* Find(std::string_view group, Sex sex) const;

  // Throws DataError when no table exists for (group, sex).
  const CoefficientTable& Get(std::string_view group, Sex sex) const;

  bool HasGroup(std::string_view group) const;
  std::vector<std::string> Groups() const;
  std::size_t size() const { return tables_.size(); }
  bool empty() const { return tables_.empty(); }

  // Writes one file per table named <group>_<sex>.csv.
  void WriteDirectory(const std::filesystem::path& dir) const;

 private:
  std::map<std::pair<std::string, Sex>, CoefficientTable, std::less<>> tables_;
};

}  // namespace spiro

#endif  // SPIRO_TABLE_SET_H_
