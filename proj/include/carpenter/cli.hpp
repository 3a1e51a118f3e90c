#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace carpenter {

/// Exit codes: 0 pass, 2 domain or verification failure, 3 I/O or format failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace carpenter
