#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tsxai::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int { kSuccess = 0, kValidationError = 1, kRuntimeFailure = 2 };

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "TSXAI_OUTPUT_ROOT";

/// Runs `tsxai <subcommand> ...`; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsxai::cli
