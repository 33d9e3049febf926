#ifndef SPIRO_TOOLS_CLI_COMMANDS_H_
#define SPIRO_TOOLS_CLI_COMMANDS_H_

#include <ostream>

#include "cli/run_config.h"

namespace spiro::cli {

// Each command assumes Validate(config) has passed. Results go to
// config.out, or to `out` when no path is given; diagnostics go to `err`.
// Errors are thrown as spiro::Error subclasses.
void RunScore(const RunConfig& config, std::ostream& out, std::ostream& err);
void RunEstimatePhi(const RunConfig& config, std::ostream& out,
                    std::ostream& err);
void RunAudit(const RunConfig& config, std::ostream& out, std::ostream& err);
void RunEvaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
void RunSynth(const RunConfig& config, std::ostream& out, std::ostream& err);
void RunPoolTables(const RunConfig& config, std::ostream& out,
                   std::ostream& err);

}  // namespace spiro::cli

#endif  // SPIRO_TOOLS_CLI_COMMANDS_H_
