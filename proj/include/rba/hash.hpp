#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rba {

// 64-bit FNV-1a over the UTF-8 bytes of the input.
// Offset basis 14695981039346656037, prime 1099511628211.
uint64_t fnv1a64(std::string_view data);

// splitmix64 step; advances the state and returns the next output word.
uint64_t splitmix64(uint64_t& state);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace rba
