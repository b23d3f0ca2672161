#include "blocklot/crypto.hpp"

#include "blocklot/errors.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <algorithm>

namespace blocklot {

Hash256 sha256(std::span<const std::uint8_t> data) {
    Hash256 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw std::runtime_error("EVP_Digest(sha256) failed");
    }
    return out;
}

Hash256 sha256(std::string_view data) {
    return sha256(as_bytes(data));
}

Hash256 double_sha256(std::span<const std::uint8_t> data) {
    const Hash256 first = sha256(data);
    return sha256(first);
}

Hash256 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) {
    Hash256 out{};
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
             out.data(), &len) == nullptr ||
        len != out.size()) {
        throw std::runtime_error("HMAC(sha256) failed");
    }
    return out;
}

void SystemEntropy::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
        throw std::runtime_error("RAND_bytes failed");
    }
}

DeterministicEntropy::DeterministicEntropy(std::string_view seed) : seed_(sha256(seed)) {}

void DeterministicEntropy::fill(std::span<std::uint8_t> out) {
    std::lock_guard lock(mutex_);
    std::size_t written = 0;
    while (written < out.size()) {
        std::array<std::uint8_t, 40> block{};
        std::copy(seed_.begin(), seed_.end(), block.begin());
        for (int i = 0; i < 8; ++i) {
            block[32 + i] = static_cast<std::uint8_t>(counter_ >> (56 - 8 * i));
        }
        ++counter_;
        const Hash256 chunk = sha256(block);
        const std::size_t n = std::min(chunk.size(), out.size() - written);
        std::copy_n(chunk.begin(), n, out.begin() + static_cast<std::ptrdiff_t>(written));
        written += n;
    }
}

} // namespace blocklot
