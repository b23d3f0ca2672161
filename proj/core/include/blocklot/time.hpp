#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace blocklot {

using Timestamp = std::chrono::sys_seconds;

// ISO-8601 UTC, e.g. "2024-03-01T12:00:00Z". Fractional seconds are accepted
// and truncated; any other zone designator is rejected.
Timestamp parse_utc(std::string_view text);

std::string format_utc(Timestamp ts);

inline Timestamp utc_now() {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

} // namespace blocklot
