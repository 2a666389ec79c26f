#include <doctest.h>

#include "rba/hash.hpp"

using namespace rba;

TEST_CASE("fnv1a64 known digests") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("abc") == 0xe71fa2190541574bULL);
    CHECK(fnv1a64("hello") == 0xa430d84680aabd0bULL);
}

TEST_CASE("fnv1a64 distinguishes permutations") {
    CHECK(fnv1a64("ab") != fnv1a64("ba"));
}

TEST_CASE("splitmix64 reference sequence") {
    uint64_t state = 0;
    CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);

    state = fnv1a64("a");
    CHECK(splitmix64(state) == 0x5f29c2aadd9b8527ULL);
    CHECK(splitmix64(state) == 0xff84f1bdb6d3884fULL);
    CHECK(splitmix64(state) == 0xfdfab147e960346eULL);
    CHECK(splitmix64(state) == 0xaf99d20610c74918ULL);
}

TEST_CASE("sha256 known digests") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
