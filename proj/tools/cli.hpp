#pragma once

#include <string>
#include <vector>

namespace turngrab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one command line (without the program name). `--config <file.json>`
/// supplies flag values from a flat JSON object; explicit flags win.
int run(std::vector<std::string> args);

}  // namespace turngrab::cli
