#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hermvar::cli {

// args excludes the program name. Returns 0 on success, 1 when a library
// precondition fails, 2 on usage errors (usage text goes to err).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hermvar::cli
