#include "proofloop/core/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <stdexcept>

namespace proofloop {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) {
    const auto hex = sha256_hex(std::to_string(base) + '\x1f' + std::string(label) + '\x1f' + std::to_string(index));
    return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace proofloop
