#ifndef MLAS_TOOLS_CLI_HPP
#define MLAS_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace mlas::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kOk = 0,
    kUsageError = 1,
    kRuntimeError = 2,
};

/// Runs `mlas_sim <args...>`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlas::cli

#endif  // MLAS_TOOLS_CLI_HPP
