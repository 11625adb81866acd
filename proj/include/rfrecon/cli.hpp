#pragma once

#include <iosfwd>

namespace rfrecon {

/// Entry point of the rfrecon command line tool. Returns 0 on success, 1 on
/// a stage error (diagnostics on `err`), 2 on a usage error.
int cli_dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace rfrecon
