#include "cli/run_config.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "spiro/error.h"
#include "spiro/fairness_audit.h"
#include "spiro/scoring.h"

namespace spiro::cli {
namespace {

constexpr char kModule[] = "cli";

bool Stochastic(const std::string& command) {
  return command == "audit" || command == "evaluate";
}

void RequireFile(const std::filesystem::path& path, std::string_view flag) {
  if (path.empty()) {
    throw ConfigError(kModule, fmt::format("{} is required", flag));
  }
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(kModule, fmt::format("{}: no such file '{}'", flag,
                                           path.string()));
  }
}

void RequireDirectory(const std::filesystem::path& path, std::string_view flag) {
  if (path.empty()) {
    throw ConfigError(kModule, fmt::format("{} is required", flag));
  }
  if (!std::filesystem::is_directory(path)) {
    throw ConfigError(kModule, fmt::format("{}: no such directory '{}'", flag,
                                           path.string()));
  }
}

void OptionalFile(const std::filesystem::path& path, std::string_view flag) {
  if (!path.empty()) RequireFile(path, flag);
}

// The parent directory of an output path has to exist already.
void WritableTarget(const std::filesystem::path& path, std::string_view flag) {
  if (path.empty()) return;
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ConfigError(kModule, fmt::format("{}: directory '{}' does not exist",
                                           flag, parent.string()));
  }
}

std::vector<Criterion> ParseCriteria(const std::string& text) {
  if (text == "all") {
    return {Criterion::kIndependence, Criterion::kSeparation,
            Criterion::kSufficiency};
  }
  std::vector<Criterion> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    const auto c = ParseCriterion(item);
    if (!c) {
      throw ConfigError(kModule, fmt::format("unknown criterion '{}'", item));
    }
    out.push_back(*c);
    start = comma + 1;
  }
  return out;
}

void Mix(std::uint64_t& h, std::string_view key, std::string_view value) {
  for (std::string_view part : {key, std::string_view("="), value,
                                std::string_view("\n")}) {
    for (unsigned char c : part) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
}

}  // namespace

OutputFormat RunConfig::ResolvedFormat() const {
  if (format.empty()) {
    return command == "score" || command == "synth" ? OutputFormat::kCsv
                                                    : OutputFormat::kJson;
  }
  return format == "csv" ? OutputFormat::kCsv : OutputFormat::kJson;
}

std::size_t RunConfig::ResolvedReplicates() const {
  if (replicates > 0) return replicates;
  return command == "evaluate" ? 1000 : 200;
}

std::string RunConfig::ResolvedScores() const {
  if (!scores.empty()) return scores;
  if (command == "score") return "specific,pooled,naive";
  if (command == "audit") return "gli2012,gliglobal,raw";
  return "gli2012,gliglobal,naive";
}

void Validate(const RunConfig& c) {
  const std::string& cmd = c.command;
  if (!c.format.empty() && c.format != "json" && c.format != "csv") {
    throw ConfigError(kModule,
                      fmt::format("--format must be json or csv, got '{}'",
                                  c.format));
  }
  if (c.threads < 1) throw ConfigError(kModule, "--threads must be >= 1");
  if (Stochastic(cmd) && !c.seed) {
    throw ConfigError(kModule, fmt::format("{} is stochastic; --seed is "
                                           "required",
                                           cmd));
  }
  OptionalFile(c.mapping, "--mapping");
  OptionalFile(c.schema, "--schema");
  WritableTarget(c.out, "--out");
  WritableTarget(c.curve_out, "--curve-out");
  WritableTarget(c.rates_out, "--rates-out");

  if (cmd == "score" || cmd == "estimate-phi" || cmd == "audit" ||
      cmd == "evaluate") {
    RequireFile(c.cohort, "--cohort");
    RequireDirectory(c.tables, "--tables");
  }
  if (cmd == "score" || cmd == "audit" || cmd == "evaluate") {
    ParseScoreList(c.ResolvedScores());
  }

  if (cmd == "estimate-phi") {
    if (c.metric != "z" && c.metric != "pctpred") {
      throw ConfigError(kModule, fmt::format("--metric must be z or pctpred, "
                                             "got '{}'",
                                             c.metric));
    }
    if (c.min_n < 1) throw ConfigError(kModule, "--min-n must be >= 1");
  } else if (cmd == "audit") {
    const auto criteria = ParseCriteria(c.criteria);
    const bool needs_outcome =
        std::find_if(criteria.begin(), criteria.end(), [](Criterion k) {
          return k != Criterion::kIndependence;
        }) != criteria.end();
    if (needs_outcome && c.outcomes.empty()) {
      throw ConfigError(kModule,
                        "separation and sufficiency need --outcome");
    }
    if (!c.outcomes.empty()) OutcomeSelector::Parse(c.outcomes);
    if (c.group_a == c.group_b) {
      throw ConfigError(kModule, "--group-a and --group-b must differ");
    }
    if (c.ResolvedReplicates() < 2) {
      throw ConfigError(kModule, "--replicates must be >= 2");
    }
    if (!(c.independence_tolerance >= 0.0) ||
        !(c.separation_tolerance >= 0.0)) {
      throw ConfigError(kModule, "tolerances must be non-negative");
    }
  } else if (cmd == "evaluate") {
    if (c.outcomes.empty()) throw ConfigError(kModule, "--outcomes is required");
    ParseOutcomeList(c.outcomes);
    if (c.ResolvedReplicates() < 100) {
      throw ConfigError(kModule, "--replicates must be >= 100");
    }
    if (c.orientation != "auto" && c.orientation != "higher" &&
        c.orientation != "lower") {
      throw ConfigError(kModule, "--orientation must be auto, higher or lower");
    }
  } else if (cmd == "synth") {
    RequireFile(c.spec, "--spec");
    if (!c.tables.empty()) RequireDirectory(c.tables, "--tables");
    if (c.ResolvedFormat() != OutputFormat::kCsv) {
      throw ConfigError(kModule, "synth writes the cohort CSV format only");
    }
  } else if (cmd == "pool-tables") {
    RequireDirectory(c.tables, "--tables");
    if (c.out.empty()) {
      throw ConfigError(kModule, "--out (output table directory) is required");
    }
    if (c.blend) {
      if (!(*c.blend >= 0.0 && *c.blend <= 1.0)) {
        throw ConfigError(kModule, "--blend must lie in [0, 1]");
      }
      if (c.groups.size() != 1) {
        throw ConfigError(kModule, "--blend needs exactly one --group");
      }
    } else {
      if (c.groups.empty()) {
        throw ConfigError(kModule, "pool-tables needs --group labels");
      }
      if (!c.weights.empty() && c.weights.size() != c.groups.size()) {
        throw ConfigError(kModule,
                          fmt::format("{} weights for {} groups",
                                      c.weights.size(), c.groups.size()));
      }
    }
  } else if (cmd != "score") {
    throw ConfigError(kModule, fmt::format("unknown command '{}'", cmd));
  }
}

std::string ConfigHash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto join = [](const auto& items) {
    std::string s;
    for (const auto& item : items) s += fmt::format("{},", item);
    return s;
  };
  Mix(h, "command", c.command);
  Mix(h, "cohort", c.cohort.string());
  Mix(h, "tables", c.tables.string());
  Mix(h, "mapping", c.mapping.string());
  Mix(h, "schema", c.schema.string());
  Mix(h, "spec", c.spec.string());
  Mix(h, "groups", join(c.groups));
  Mix(h, "privileged", c.privileged);
  Mix(h, "pooled", c.pooled);
  Mix(h, "metric", c.metric);
  Mix(h, "criteria", c.criteria);
  Mix(h, "scores", c.ResolvedScores());
  Mix(h, "outcomes", c.outcomes);
  Mix(h, "group_a", c.group_a);
  Mix(h, "group_b", c.group_b);
  Mix(h, "orientation", c.orientation);
  Mix(h, "label", c.label);
  Mix(h, "ls_from", c.ls_from);
  Mix(h, "weights", join(c.weights));
  Mix(h, "blend", c.blend ? fmt::format("{}", *c.blend) : "");
  Mix(h, "seed", c.seed ? fmt::format("{}", *c.seed) : "");
  Mix(h, "replicates", fmt::format("{}", c.ResolvedReplicates()));
  Mix(h, "min_n", fmt::format("{}", c.min_n));
  Mix(h, "independence_tolerance", fmt::format("{}", c.independence_tolerance));
  Mix(h, "separation_tolerance", fmt::format("{}", c.separation_tolerance));
  Mix(h, "at_risk_filter", c.at_risk_filter ? "1" : "0");
  Mix(h, "adult_filter", c.adult_filter ? "1" : "0");
  Mix(h, "weighted", c.weighted ? "1" : "0");
  Mix(h, "format", c.ResolvedFormat() == OutputFormat::kCsv ? "csv" : "json");
  return fmt::format("{:016x}", h);
}

}  // namespace spiro::cli
