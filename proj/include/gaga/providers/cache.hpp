#pragma once

#include <filesystem>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace gaga::providers {

// Append-only JSON-lines store. Each line is {"key": ..., "value": ...}; a
// later line for the same key wins when the file is reloaded. An empty path
// keeps everything in memory. Thread-safe within one process.
class JsonlCache {
 public:
  JsonlCache() = default;
  explicit JsonlCache(std::filesystem::path path);

  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value);
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, nlohmann::json> entries_;
};

// $GAGA_CACHE_DIR, else `fallback`.
std::filesystem::path cache_dir(const std::filesystem::path& fallback);

}  // namespace gaga::providers
