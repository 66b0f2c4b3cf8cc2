#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hlcmon
{
    /// Entry point of the hlcmon tool. args[0] is the program name. Returns
    /// the process exit code.
    int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace hlcmon
