#pragma once

#include <string>
#include <vector>

namespace mcsim::cli {

// Parse and execute one subcommand invocation.  `args` excludes the program
// name, e.g. {"billiards", "--n", "4", "--scheduler", "lazy", ...}.
//
// Exit codes: 0 success; 2 configuration error (unknown subcommand or flag,
// missing parameters — reported exhaustively in one message — or conflicting
// ones); 3 verification checks failed.  All randomness flows from --seed, so
// repeated runs of the same build write byte-identical outputs except for the
// wall_clock rows of metrics.csv.
int run_command(const std::vector<std::string>& args);

// argv-style wrapper for main().
int run_main(int argc, const char* const* argv);

} // namespace mcsim::cli
