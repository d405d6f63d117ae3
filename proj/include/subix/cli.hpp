#pragma once

#include <iosfwd>

namespace subix {

/// Entry point behind the `subix` executable. Returns the process exit code
/// (0 ok, 1 validation, 2 transport, 3 invariant).
int run_cli(int argc, char** argv);

/// Same, with explicit streams (tests capture them).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace subix
