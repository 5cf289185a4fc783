#pragma once

#include <string>
#include <vector>

namespace uvae::cli {

/// Entry point shared by the binary and the tests. args excludes argv[0].
/// Returns 0 on success, 1 on runtime failure, 2 on usage/config errors.
int run_cli(const std::vector<std::string>& args);

} // namespace uvae::cli
