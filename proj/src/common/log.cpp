#include "gaga/common/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace gaga::log {

namespace {

Level from_env() {
  const char* v = std::getenv("GAGA_LOG_LEVEL");
  if (!v) return Level::info;
  const std::string_view s(v);
  if (s == "debug") return Level::debug;
  if (s == "warn") return Level::warn;
  if (s == "error") return Level::error;
  if (s == "off") return Level::off;
  return Level::info;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{from_env()};
  return lvl;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::string>& kept() {
  static std::vector<std::string> w;
  return w;
}

void emit(Level lvl, std::string_view tag, std::string_view msg) {
  if (lvl < current().load()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << "[" << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level level) { current().store(level); }
Level level() { return current().load(); }

void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void error(std::string_view msg) { emit(Level::error, "error", msg); }

void warn(std::string_view msg) {
  {
    std::lock_guard lock(sink_mutex());
    kept().emplace_back(msg);
  }
  emit(Level::warn, "warn", msg);
}

std::vector<std::string> warnings() {
  std::lock_guard lock(sink_mutex());
  return kept();
}

void clear_warnings() {
  std::lock_guard lock(sink_mutex());
  kept().clear();
}

}  // namespace gaga::log
