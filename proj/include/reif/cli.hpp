#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reif::cli {

// Exit codes: 0 success, 2 validation or parse error, 3 when a run
// violates one of its asserted estimates, 1 for anything else.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reif::cli
