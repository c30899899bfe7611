#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace snml::cli {

/// Exit codes: 0 success, 1 a check's verdict contradicts --expect,
/// 2 usage or configuration error, 3 numerical failure in the library.
enum ExitCode : int { kOk = 0, kExpectationFailed = 1, kUsage = 2, kNumeric = 3 };

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace snml::cli
