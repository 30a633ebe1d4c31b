#pragma once

#include <string>

namespace dbnlc {

/// SHA-256 digest of a byte string, as lowercase hex.
std::string sha256_hex(const std::string& data);

/// SHA-256 digest of a file's contents.
std::string sha256_file(const std::string& path);

} // namespace dbnlc
