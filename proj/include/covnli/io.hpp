#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace covnli {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace covnli
