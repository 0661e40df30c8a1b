#pragma once

#include <string>
#include <vector>

namespace claimcheck::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Runs one command line (args[0] is the program name). Diagnostics go to
/// standard error; data only to files named by flags.
int dispatch(const std::vector<std::string>& args);

std::string version();

}  // namespace claimcheck::cli
