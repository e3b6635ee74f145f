#pragma once

#include <ostream>

namespace iontrap::cli
{

/// Runs the command line; returns 0 on success, 1 on runtime failure, 2 on bad input.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace iontrap::cli
