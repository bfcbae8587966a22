// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <iosfwd>

namespace poslda::cli {

// Process exit statuses.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,       // bad flags, missing required paths
  kIo = 3,          // unreadable input, unwritable output
  kInvalid = 4,     // invalid configuration, malformed data or snapshot
  kNumerical = 5,   // sampler or evaluation hit an undefined quantity
};

// Runs one command line. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace poslda::cli
