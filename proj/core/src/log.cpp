#include "crosswatch/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace crosswatch::log {

Level level() {
    static const Level lvl = [] {
        const char* env = std::getenv("CROSSWATCH_LOG");
        if (!env) return Level::Warn;
        if (std::strcmp(env, "debug") == 0) return Level::Debug;
        if (std::strcmp(env, "info") == 0) return Level::Info;
        if (std::strcmp(env, "quiet") == 0) return Level::Quiet;
        return Level::Warn;
    }();
    return lvl;
}

namespace {
void emit(Level at, const char* tag, const std::string& msg) {
    if (level() > at) return;
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}
} // namespace

void debug(const std::string& msg) { emit(Level::Debug, "debug", msg); }
void info(const std::string& msg) { emit(Level::Info, "info", msg); }
void warn(const std::string& msg) { emit(Level::Warn, "warn", msg); }

} // namespace crosswatch::log
