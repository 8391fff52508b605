#pragma once

namespace vizsig::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a data error and 2 on a
/// usage error; diagnostics and the resolved configuration go to stderr.
int run(int argc, char** argv);

}  // namespace vizsig::cli
