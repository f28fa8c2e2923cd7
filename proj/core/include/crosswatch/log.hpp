#pragma once

#include <string>

namespace crosswatch::log {

// Verbosity is read once from the CROSSWATCH_LOG environment variable:
// debug | info | warn | quiet. Default is warn. Everything goes to stderr so
// machine-readable stdout stays clean.
enum class Level { Debug = 0, Info = 1, Warn = 2, Quiet = 3 };

Level level();

void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);

} // namespace crosswatch::log
