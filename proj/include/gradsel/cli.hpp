#pragma once

namespace gradsel {

// Parses arguments, dispatches the subcommand, writes output files, and
// reports any failure as a single machine-parsable stderr line.  Returns the
// process exit status.
int run_cli(int argc, const char* const* argv);

}  // namespace gradsel
