#include "gaga/providers/cache.hpp"

#include <cstdlib>
#include <fstream>

#include "gaga/common/log.hpp"

namespace gaga::providers {

JsonlCache::JsonlCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("value");
    } catch (const nlohmann::json::exception&) {
      // A torn final line from an interrupted run is expected; skip it.
      log::warn("cache " + path_.string() + ": skipping unreadable line " + std::to_string(line_no));
    }
  }
}

std::optional<nlohmann::json> JsonlCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void JsonlCache::put(const std::string& key, const nlohmann::json& value) {
  std::lock_guard lock(mu_);
  entries_[key] = value;
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  out << nlohmann::json{{"key", key}, {"value", value}}.dump() << '\n';
  out.flush();
}

std::size_t JsonlCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::filesystem::path cache_dir(const std::filesystem::path& fallback) {
  if (const char* v = std::getenv("GAGA_CACHE_DIR"); v && *v) return v;
  return fallback;
}

}  // namespace gaga::providers
