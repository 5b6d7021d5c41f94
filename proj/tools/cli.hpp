#pragma once

#include <iosfwd>

namespace fidroute::cli {

/// Runs one `fidroute` invocation, writing normal output to `out` and
/// diagnostics to `err`. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fidroute::cli
