#ifndef SPIRO_TOOLS_CLI_CLI_H_
#define SPIRO_TOOLS_CLI_CLI_H_

#include <ostream>

namespace spiro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Parses arguments, validates the resulting configuration, and runs the
// selected command. Returns the process exit status.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace spiro::cli

#endif  // SPIRO_TOOLS_CLI_CLI_H_
