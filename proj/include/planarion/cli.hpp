#pragma once

#include <string>
#include <vector>

namespace planarion::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Dispatch a command line (without the program name). Returns the process
/// exit code: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace planarion::cli
