#pragma once

#include <iosfwd>

#include "helika/error.hpp"

namespace helika {

/// Process exit statuses.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitConfig = 2,
  kExitDomain = 3,
  kExitIo = 4,
};

int exit_code(ErrorCode code);

/// Entry point of the `helika` tool: make-state, observe, verify and gauge.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace helika
