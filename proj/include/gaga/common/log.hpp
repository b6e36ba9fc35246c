#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gaga::log {

enum class Level { debug, info, warn, error, off };

// Messages below this level are dropped. Defaults to info; GAGA_LOG_LEVEL
// (debug|info|warn|error|off) overrides it at first use.
void set_level(Level level);
Level level();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

// Every warning is also kept in memory so callers can surface them in
// reports. Thread-safe.
std::vector<std::string> warnings();
void clear_warnings();

}  // namespace gaga::log
