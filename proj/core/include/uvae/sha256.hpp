#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uvae {

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::string& path);

} // namespace uvae
