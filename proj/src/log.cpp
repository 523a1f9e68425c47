#include "turngrab/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <string_view>

namespace turngrab::log {
namespace {

Level from_env() {
    const char* env = std::getenv("TURNGRAB_LOG");
    if (env == nullptr) return Level::info;
    std::string_view v(env);
    if (v == "error") return Level::error;
    if (v == "debug") return Level::debug;
    return Level::info;
}

std::atomic<int>& current() {
    static std::atomic<int> lvl{static_cast<int>(from_env())};
    return lvl;
}

void emit(Level lvl, const char* tag, const std::string& msg) {
    if (static_cast<int>(lvl) > current().load()) return;
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void error(const std::string& msg) { emit(Level::error, "error", msg); }
void info(const std::string& msg) { emit(Level::info, "info", msg); }
void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }

}  // namespace turngrab::log
