#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mda {

inline constexpr const char* kToolName = "mdafp";
inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes: 0 success, 1 internal error (or failed benchmark cells),
// 2 input/usage error, 3 data-shape error.
enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitUsage = 2, kExitShape = 3 };

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mda
