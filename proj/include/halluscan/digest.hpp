#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace halluscan {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace halluscan
