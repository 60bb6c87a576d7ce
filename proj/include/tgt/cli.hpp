#pragma once

#include <string>
#include <vector>

namespace tgt {

// Full command-line entry point; `args` is argv without the program name.
// Returns the process exit code: 0 success, 1 usage error, 2 data error,
// 3 numeric failure.
int run(const std::vector<std::string>& args);

}  // namespace tgt
