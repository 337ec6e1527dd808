#pragma once

#include <filesystem>
#include <string>

namespace fedsurv {

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

// Writes content to a sibling temp file, then renames it over the target.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

} // namespace fedsurv
