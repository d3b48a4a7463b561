#pragma once

namespace psyrig::cli {

// Parses argv and dispatches one command. Returns the process exit status:
// 0 success, 1 validation failure, 2 runtime or usage error.
int run(int argc, const char* const* argv);

}  // namespace psyrig::cli
