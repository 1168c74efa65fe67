#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace syco {

// SHA-256 of the input, lowercase hex.
std::string sha256_hex(std::string_view data);

// First 32 hex chars (128 bits) of sha256_hex; used for case ids and cache keys.
std::string short_hash(std::string_view data);

// SHA-256 of a file's contents; throws Error if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace syco
