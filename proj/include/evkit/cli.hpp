#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evkit {

/// Full command-line entry point: subcommands convert, stats, augment, plan,
/// evaluate; global --config, --seed, --preset, --threads (EVKIT_THREADS as
/// fallback). On failure prints one line "error: <CODE>: <message>" to `err`
/// and returns a nonzero exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evkit
