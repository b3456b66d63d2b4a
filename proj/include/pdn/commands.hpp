#pragma once

#include <iosfwd>

namespace pdn {

/// Command-line entry point. Returns the process exit code: 0 on success,
/// 1 on a runtime failure, 2 on a usage error. Failures print one line
/// `pdn: error: <category>: <message>` to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pdn
