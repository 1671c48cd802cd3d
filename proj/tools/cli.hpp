#pragma once

#include <iosfwd>

namespace pmonge {

/// Exit codes: 0 pass, 1 audit failure or exhausted budget, 2 configuration
/// error, 3 assembly error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmonge
