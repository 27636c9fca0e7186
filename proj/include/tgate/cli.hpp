#pragma once

#include <iosfwd>

namespace tgate {

/// Entry point of the `tgate` command. Returns the process exit status:
/// 0 on success, 2 on invalid input or usage, 3 on numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tgate
