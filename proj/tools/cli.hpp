#pragma once

#include <iosfwd>

namespace kgchat::cli {

/// Entry point of the `kgchat` command. Returns the process exit code:
/// 0 success, 1 bad input or failure, 2 query rejected by the validation
/// layer, 3 role not permitted to run raw queries.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgchat::cli
