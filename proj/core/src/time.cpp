#include "blocklot/time.hpp"

#include "blocklot/errors.hpp"

#include <charconv>
#include <cstdio>

namespace blocklot {

namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw Error(ErrorCode::InvalidParameter, "malformed timestamp: " + std::string(text));
    }
    return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
    if (text[pos] != c) {
        throw Error(ErrorCode::InvalidParameter, "malformed timestamp: " + std::string(text));
    }
}

} // namespace

Timestamp parse_utc(std::string_view text) {
    using namespace std::chrono;
    if (text.size() < 20) {
        throw Error(ErrorCode::InvalidParameter, "malformed timestamp: " + std::string(text));
    }
    expect(text, 4, '-');
    expect(text, 7, '-');
    expect(text, 10, 'T');
    expect(text, 13, ':');
    expect(text, 16, ':');
    const int y = read_int(text, 0, 4);
    const int mo = read_int(text, 5, 2);
    const int d = read_int(text, 8, 2);
    const int h = read_int(text, 11, 2);
    const int mi = read_int(text, 14, 2);
    const int s = read_int(text, 17, 2);

    std::size_t pos = 19;
    if (text[pos] == '.') {
        ++pos;
        const std::size_t digits_start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == digits_start) {
            throw Error(ErrorCode::InvalidParameter, "malformed timestamp: " + std::string(text));
        }
    }
    if (pos + 1 != text.size() || text[pos] != 'Z') {
        throw Error(ErrorCode::InvalidParameter,
                    "timestamp must be UTC with a trailing Z: " + std::string(text));
    }

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        throw Error(ErrorCode::InvalidParameter, "timestamp out of range: " + std::string(text));
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_utc(Timestamp ts) {
    using namespace std::chrono;
    const sys_days day_point = floor<days>(ts);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{ts - day_point};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

} // namespace blocklot
