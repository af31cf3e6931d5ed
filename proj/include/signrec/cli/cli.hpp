#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace signrec::cli {

// Exit codes of `signrec`.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,    // bad flags, unknown subcommand, invalid config values
  kDataError = 2,     // unreadable, malformed or inconsistent input files
  kRuntimeError = 3,  // anything else
};

// Runs one `signrec` invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace signrec::cli
