#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gaga::io {

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames, so readers never observe a
// half-written artifact.
void write_file(const std::filesystem::path& path, std::string_view bytes);

void require_file(const std::filesystem::path& path);

}  // namespace gaga::io
