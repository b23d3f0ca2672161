#include "blocklot/serialize.hpp"

#include "blocklot/errors.hpp"

#include <array>
#include <charconv>

namespace blocklot {

namespace {

constexpr std::array<std::string_view, 18> kFields = {
    "event_id",     "name",          "announcement_date", "num_winners",        "block_offset",
    "target_height", "note",         "channel_id",        "open_tx_id",         "subscribe_tx_ids",
    "draw_tx_id",   "member_list",   "winner_list",       "random_seed",        "initial_random_key",
    "status",       "organizer_digest", "verifiable_random_key",
};

std::string escape(std::string_view text, bool in_list) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case ',':
            if (in_list) {
                out += "\\,";
            } else {
                out.push_back(c);
            }
            break;
        default: out.push_back(c);
        }
    }
    return out;
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorCode::MalformedRecord, "malformed event record: " + what);
}

std::string unescape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\') {
            out.push_back(text[i]);
            continue;
        }
        if (++i == text.size()) malformed("dangling escape");
        switch (text[i]) {
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case ',': out.push_back(','); break;
        default: malformed("unknown escape \\" + std::string(1, text[i]));
        }
    }
    return out;
}

// Splits on commas that are not escaped.
std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\\') {
            ++i;
        } else if (text[i] == ',') {
            out.push_back(unescape(text.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.push_back(unescape(text.substr(start)));
    return out;
}

template <typename Range, typename Fn>
std::string join(const Range& items, Fn&& render) {
    std::string out;
    bool first = true;
    for (const auto& item : items) {
        if (!first) out.push_back(',');
        out += render(item);
        first = false;
    }
    return out;
}

void line(std::string& out, std::string_view field, std::string_view value) {
    out += field;
    out.push_back('=');
    out += value;
    out.push_back('\n');
}

template <typename T>
T parse_number(std::string_view field, std::string_view text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        malformed(std::string(field) + " is not a number");
    }
    return value;
}

Hash256 parse_hash(std::string_view field, std::string_view text) {
    try {
        return fixed_from_hex<32>(text);
    } catch (const Error&) {
        malformed(std::string(field) + " is not a 32-byte hex value");
    }
}

std::vector<ParticipantDigest> parse_digests(std::string_view field, std::string_view text) {
    std::vector<ParticipantDigest> out;
    for (const auto& item : split_list(text)) {
        out.push_back(ParticipantDigest{parse_hash(field, item)});
    }
    return out;
}

} // namespace

std::string canonical_serialize(const LotteryEvent& event) {
    const auto hex_digest = [](const ParticipantDigest& d) { return d.hex(); };
    const auto text_item = [](const std::string& s) { return escape(s, true); };

    std::string out;
    line(out, "event_id", escape(event.event_id, false));
    line(out, "name", escape(event.name, false));
    line(out, "announcement_date", format_utc(event.announcement_date));
    line(out, "num_winners", std::to_string(event.num_winners));
    line(out, "block_offset", std::to_string(event.block_offset));
    line(out, "target_height", std::to_string(event.target_height));
    line(out, "note", escape(event.note, false));
    line(out, "channel_id", escape(event.channel_id, false));
    line(out, "open_tx_id", escape(event.open_tx_id, false));
    line(out, "subscribe_tx_ids", join(event.subscribe_tx_ids, text_item));
    line(out, "draw_tx_id", event.draw_tx_id ? escape(*event.draw_tx_id, false) : std::string(kUndefined));
    line(out, "member_list", join(event.member_list, hex_digest));
    line(out, "winner_list", join(event.winner_list, hex_digest));
    line(out, "random_seed", event.random_seed ? to_hex(*event.random_seed) : std::string(kUndefined));
    line(out, "initial_random_key", to_hex(event.initial_random_key));
    line(out, "status", to_string(event.status));
    line(out, "organizer_digest", to_hex(event.organizer_digest));
    return out;
}

std::string export_event(const LotteryEvent& event) {
    std::string out = canonical_serialize(event);
    line(out, "verifiable_random_key",
         event.verifiable_random_key ? event.verifiable_random_key->hex() : std::string(kUndefined));
    return out;
}

LotteryEvent parse_event(std::string_view text) {
    std::array<std::string_view, kFields.size()> values{};
    std::size_t pos = 0;
    for (std::size_t index = 0; index < kFields.size(); ++index) {
        const std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            malformed("missing field " + std::string(kFields[index]));
        }
        const std::string_view row = text.substr(pos, eol - pos);
        const std::size_t eq = row.find('=');
        if (eq == std::string_view::npos || row.substr(0, eq) != kFields[index]) {
            malformed("expected field " + std::string(kFields[index]) + " on line " + std::to_string(index + 1));
        }
        values[index] = row.substr(eq + 1);
        pos = eol + 1;
    }
    if (pos != text.size()) {
        malformed("trailing data after verifiable_random_key");
    }

    LotteryEvent event;
    event.event_id = unescape(values[0]);
    event.name = unescape(values[1]);
    try {
        event.announcement_date = parse_utc(values[2]);
    } catch (const Error&) {
        malformed("announcement_date is not an ISO-8601 UTC timestamp");
    }
    event.num_winners = parse_number<std::uint32_t>(kFields[3], values[3]);
    event.block_offset = parse_number<std::uint64_t>(kFields[4], values[4]);
    event.target_height = parse_number<std::uint64_t>(kFields[5], values[5]);
    event.note = unescape(values[6]);
    event.channel_id = unescape(values[7]);
    event.open_tx_id = unescape(values[8]);
    event.subscribe_tx_ids = split_list(values[9]);
    if (values[10] != kUndefined) event.draw_tx_id = unescape(values[10]);
    event.member_list = parse_digests(kFields[11], values[11]);
    event.winner_list = parse_digests(kFields[12], values[12]);
    if (values[13] != kUndefined) event.random_seed = parse_hash(kFields[13], values[13]);
    event.initial_random_key = parse_hash(kFields[14], values[14]);
    if (values[15] == "REGISTERED") {
        event.status = EventStatus::Registered;
    } else if (values[15] == "DRAWN") {
        event.status = EventStatus::Drawn;
    } else {
        malformed("unknown status " + std::string(values[15]));
    }
    event.organizer_digest = parse_hash(kFields[16], values[16]);
    if (values[17] != kUndefined) {
        try {
            event.verifiable_random_key = VerifiableRandomKey::from_hex(values[17]);
        } catch (const Error&) {
            malformed("verifiable_random_key is not a 64-byte hex value");
        }
    }

    // Only the canonical spelling is accepted (lowercase hex, no leading
    // zeros, no empty list items).
    if (export_event(event) != text) {
        malformed("record is not in canonical form");
    }
    return event;
}

} // namespace blocklot
