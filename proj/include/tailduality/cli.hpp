#pragma once

#include <iosfwd>

namespace tailduality {

/// Entry point used by both the real binary and the tests.  Returns the
/// process exit code: 0 on success, 2 on usage errors, 1 on runtime
/// failures (file missing, invalid domain, non-convergence).
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace tailduality
