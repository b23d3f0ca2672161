#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blocklot {

using Bytes = std::vector<std::uint8_t>;
using Hash256 = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> data);

// Accepts upper or lower case; throws Error{InvalidParameter} on odd length
// or non-hex characters.
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex);

inline std::span<const std::uint8_t> as_bytes(std::string_view text) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()};
}

bool is_lower_hex(std::string_view text) noexcept;

} // namespace blocklot

#include "blocklot/errors.hpp"

namespace blocklot {

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex) {
    if (hex.size() != 2 * N) {
        throw Error(ErrorCode::InvalidParameter,
                    "expected " + std::to_string(2 * N) + " hex characters, got " +
                        std::to_string(hex.size()));
    }
    const Bytes raw = from_hex(hex);
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = raw[i];
    }
    return out;
}

} // namespace blocklot
