#pragma once

#include "blocklot/bytes.hpp"

#include <mutex>
#include <span>
#include <string_view>

namespace blocklot {

Hash256 sha256(std::span<const std::uint8_t> data);
Hash256 sha256(std::string_view data);
Hash256 double_sha256(std::span<const std::uint8_t> data);
Hash256 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

// Source of fresh secret bytes (tokens, initial random keys, id salts).
class EntropySource {
public:
    virtual ~EntropySource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    template <std::size_t N>
    std::array<std::uint8_t, N> draw() {
        std::array<std::uint8_t, N> out{};
        fill(out);
        return out;
    }
};

// OpenSSL CSPRNG.
class SystemEntropy final : public EntropySource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

// SHA-256 in counter mode over a fixed seed. Not for production secrets.
class DeterministicEntropy final : public EntropySource {
public:
    explicit DeterministicEntropy(std::string_view seed);

    void fill(std::span<std::uint8_t> out) override;

private:
    std::mutex mutex_;
    Hash256 seed_;
    std::uint64_t counter_ = 0;
};

} // namespace blocklot
