#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cmjlab {

/// Shortest round-trip representation ("2", "0.5").
std::string format_number(double x);

/// Fixed 17-significant-digit representation used for every data artifact.
std::string format_g17(double x);

/// Writes `content` to a temporary sibling and renames it over `path`, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace cmjlab
