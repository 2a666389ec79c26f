#include "rba/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "rba/errors.hpp"

namespace rba {

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len,
                   EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest computation failed");
    }
    std::string hex(static_cast<size_t>(len) * 2, '\0');
    static const char* k = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        hex[2 * i] = k[digest[i] >> 4];
        hex[2 * i + 1] = k[digest[i] & 0xF];
    }
    return hex;
}

}  // namespace rba
