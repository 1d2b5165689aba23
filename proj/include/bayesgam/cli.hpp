#pragma once

#include <ostream>

namespace bayesgam::cli {

/// Entry point of the bayesgam command line. Returns 0 on success, 1 for user or data
/// errors, 2 for internal failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bayesgam::cli
