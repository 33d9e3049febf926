#ifndef SPIRO_TOOLS_CLI_RUN_CONFIG_H_
#define SPIRO_TOOLS_CLI_RUN_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spiro::cli {

enum class OutputFormat { kJson, kCsv };

// Everything a command needs, after flags and any config file are merged.
// Empty strings and zero counts mean "use the command's default".
struct RunConfig {
  std::string command;

  std::filesystem::path cohort;
  std::filesystem::path tables;
  std::filesystem::path mapping;
  std::filesystem::path schema;
  std::filesystem::path spec;

  std::vector<std::string> groups;
  std::string privileged = "White";
  std::string pooled = "pooled";
  std::string metric = "z";
  std::string criteria = "all";
  std::string scores;
  std::string outcomes;
  std::string group_a = "White";
  std::string group_b = "Black";
  std::string orientation = "auto";
  std::string label = "pooled";
  std::string ls_from;
  std::vector<double> weights;
  std::optional<double> blend;

  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::size_t replicates = 0;
  std::size_t min_n = 30;
  double independence_tolerance = 0.02;
  double separation_tolerance = 0.05;
  bool at_risk_filter = true;
  bool adult_filter = true;
  bool weighted = false;

  std::filesystem::path out;
  std::filesystem::path curve_out;
  std::filesystem::path rates_out;
  std::string format;  // "json" or "csv"; empty picks the command default
  bool canonical = false;

  OutputFormat ResolvedFormat() const;
  std::size_t ResolvedReplicates() const;
  std::string ResolvedScores() const;
};

// Checks the whole configuration without reading any data: required inputs
// exist, selections parse, seeds are present for stochastic commands.
// Throws spiro::ConfigError.
void Validate(const RunConfig& config);

// FNV-1a over every field that can change results. Threads, output paths
// and the canonical switch are excluded.
std::string ConfigHash(const RunConfig& config);

}  // namespace spiro::cli

#endif  // SPIRO_TOOLS_CLI_RUN_CONFIG_H_
