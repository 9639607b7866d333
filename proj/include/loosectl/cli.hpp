#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lc {

/// Entry point of the `lc` tool. Exit codes: 0 success (or passed check),
/// 1 pipeline/validation failure (or failed check), 2 usage error.
/// Errors are written to err as lines prefixed "error:". args excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lc
