#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace ulab {

/// Lowercase hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& text);
/// Hash of a file's contents; throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ulab
