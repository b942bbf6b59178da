#pragma once

#include <string>
#include <vector>

namespace fsl::cli {

/// Entry point of the `fsl` tool. Returns the process exit code:
/// 0 ok, 1 usage error, 2 data error, 3 numerical failure.
int run(int argc, char** argv);

/// Same, for in-process callers (argv[0] is supplied).
int run(const std::vector<std::string>& args);

}  // namespace fsl::cli
