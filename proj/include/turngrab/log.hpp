#pragma once

#include <string>

namespace turngrab::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Active level, read once from TURNGRAB_LOG (error|info|debug, default info).
Level level();
void set_level(Level lvl);

void error(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace turngrab::log
