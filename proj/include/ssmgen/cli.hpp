#pragma once

namespace ssmgen::cli {

// Entry point behind the ssmgen binary; exposed so tests can drive the CLI
// in-process. Returns the process exit code: 0 success, 1 usage/config error,
// 2 training divergence.
int run(int argc, const char* const* argv);

}  // namespace ssmgen::cli
