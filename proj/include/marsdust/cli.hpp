#pragma once

#include <string>
#include <vector>

namespace marsdust::cli {

/// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace marsdust::cli
