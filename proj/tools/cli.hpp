#pragma once

#include <ostream>

namespace penlearn {

// Exit status: 0 success, 1 usage error, 2 data error, 3 failed gradient
// check.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace penlearn
