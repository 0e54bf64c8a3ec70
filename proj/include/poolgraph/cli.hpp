#pragma once

#include <iosfwd>

namespace poolgraph {

/// Entry point for the `poolgraph` command (run, sweep, ablate, synth, report).
/// Returns the process exit status; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace poolgraph
