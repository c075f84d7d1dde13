#pragma once

#include <string>
#include <vector>

namespace ergnn::cli {

/// Entry point behind the `ergnn` binary. Exit codes: 0 success,
/// 1 validation/user error, 2 IO/system error.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace ergnn::cli
