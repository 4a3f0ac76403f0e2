#pragma once

#include <cstdint>
#include <string>

namespace radiolith {

/// Lowercase hex SHA-256 digest of a byte string.
std::string sha256_hex(const std::string& data);

/// Digest of a file's contents; throws if the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace radiolith
