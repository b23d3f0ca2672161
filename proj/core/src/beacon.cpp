#include "blocklot/beacon.hpp"

#include "blocklot/crypto.hpp"
#include "blocklot/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

namespace blocklot {

namespace {

using json = nlohmann::json;

void put_le32(std::uint8_t* out, std::uint32_t v) noexcept {
    for (int i = 0; i < 4; ++i) {
        out[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
}

void put_reversed(std::uint8_t* out, const Hash256& display) noexcept {
    std::reverse_copy(display.begin(), display.end(), out);
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorCode::MalformedResponse, what);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

template <typename T>
T parse_int(std::string_view text, std::size_t line_no, std::string_view what) {
    T value{};
    int base = 10;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        text.remove_prefix(2);
        base = 16;
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        malformed("fixture line " + std::to_string(line_no) + ": bad " + std::string(what));
    }
    return value;
}

Hash256 parse_fixture_hash(std::string_view text, std::size_t line_no, std::string_view what) {
    try {
        return fixed_from_hex<32>(text);
    } catch (const Error&) {
        malformed("fixture line " + std::to_string(line_no) + ": bad " + std::string(what));
    }
}

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value == nullptr ? std::string{} : std::string(value);
}

Hash256 json_hash(const json& body, const char* field) {
    if (!body.contains(field) || !body[field].is_string()) {
        malformed(std::string("beacon response lacks string field '") + field + "'");
    }
    try {
        return fixed_from_hex<32>(body[field].get<std::string>());
    } catch (const Error&) {
        malformed(std::string("beacon field '") + field + "' is not a 32-byte hex hash");
    }
}

std::uint64_t json_uint(const json& body, const char* field) {
    if (!body.contains(field) || !body[field].is_number_integer()) {
        malformed(std::string("beacon response lacks integer field '") + field + "'");
    }
    if (body[field].is_number_unsigned()) return body[field].get<std::uint64_t>();
    const auto value = body[field].get<std::int64_t>();
    if (value < 0) malformed(std::string("beacon field '") + field + "' is negative");
    return static_cast<std::uint64_t>(value);
}

json parse_json(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        malformed(std::string("beacon returned invalid JSON: ") + e.what());
    }
}

} // namespace

std::array<std::uint8_t, 80> serialize_header(const BlockHeader& header) {
    std::array<std::uint8_t, 80> wire{};
    put_le32(wire.data(), static_cast<std::uint32_t>(header.version));
    put_reversed(wire.data() + 4, header.previous_hash);
    put_reversed(wire.data() + 36, header.merkle_root);
    put_le32(wire.data() + 68, header.timestamp);
    put_le32(wire.data() + 72, header.bits);
    put_le32(wire.data() + 76, header.nonce);
    return wire;
}

Hash256 compute_block_hash(const BlockHeader& header) {
    const auto wire = serialize_header(header);
    Hash256 hash = double_sha256(wire);
    std::reverse(hash.begin(), hash.end());
    return hash;
}

bool verify_seed(const BlockHeader& header, const Hash256& claimed_seed) {
    return compute_block_hash(header) == claimed_seed;
}

BeaconMode parse_beacon_mode(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "live") return BeaconMode::Live;
    if (lower == "fixture") return BeaconMode::Fixture;
    throw Error(ErrorCode::InvalidParameter, "unknown beacon mode '" + std::string(text) + "'");
}

BeaconConfig BeaconConfig::from_env() {
    BeaconConfig config;
    const std::string url = env_or_empty("BLOCKLOT_BEACON_URL");
    const std::string fixture = env_or_empty("BLOCKLOT_BEACON_FIXTURE");
    const std::string mode = env_or_empty("BLOCKLOT_BEACON_MODE");
    if (!url.empty()) config.base_url = url;
    if (!fixture.empty()) config.fixture_path = fixture;
    if (!mode.empty()) {
        config.mode = parse_beacon_mode(mode);
    } else {
        config.mode = fixture.empty() ? BeaconMode::Live : BeaconMode::Fixture;
    }
    return config;
}

Fixture Fixture::parse(std::string_view text) {
    Fixture fixture;
    std::size_t line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        const std::string_view row = trim(raw);
        if (row.empty() || row.front() == '#') continue;
        const auto cols = split(row, ',');
        if (cols.size() == 2 && trim(cols[0]) == "tip") {
            const auto tip = parse_int<std::uint64_t>(trim(cols[1]), line_no, "tip height");
            if (fixture.tip && *fixture.tip != tip) {
                malformed("fixture declares two different tips");
            }
            fixture.tip = tip;
            continue;
        }
        if (cols.size() != 8) {
            malformed("fixture line " + std::to_string(line_no) + ": expected 8 columns, got " +
                      std::to_string(cols.size()));
        }
        FixtureRecord record;
        BlockHeader& h = record.header;
        h.height = parse_int<std::uint64_t>(trim(cols[0]), line_no, "height");
        h.version = static_cast<std::int32_t>(parse_int<std::int64_t>(trim(cols[1]), line_no, "version"));
        h.previous_hash = parse_fixture_hash(trim(cols[2]), line_no, "previous_hash");
        h.merkle_root = parse_fixture_hash(trim(cols[3]), line_no, "merkle_root");
        h.timestamp = parse_int<std::uint32_t>(trim(cols[4]), line_no, "timestamp");
        h.bits = parse_int<std::uint32_t>(trim(cols[5]), line_no, "bits");
        h.nonce = parse_int<std::uint32_t>(trim(cols[6]), line_no, "nonce");
        record.expected_hash = parse_fixture_hash(trim(cols[7]), line_no, "expected_hash");

        auto [it, inserted] = fixture.records.emplace(h.height, record);
        if (!inserted && (it->second.header != h || it->second.expected_hash != record.expected_hash)) {
            fixture.conflicts.insert(h.height);
        }
    }
    return fixture;
}

Fixture Fixture::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::BeaconUnavailable, "cannot open beacon fixture " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

BeaconClient::BeaconClient(BeaconConfig config) : config_(std::move(config)) {
    if (config_.mode == BeaconMode::Fixture) {
        fixture_ = Fixture::load(config_.fixture_path);
        return;
    }
    // Split "scheme://host[:port][/prefix]" into httplib's origin and a path prefix.
    const std::string& url = config_.base_url;
    const std::size_t scheme_end = url.find("://");
    const std::size_t path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? std::string{} : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (origin_.empty()) {
        throw Error(ErrorCode::InvalidParameter, "beacon base URL is empty");
    }
}

BeaconClient::~BeaconClient() = default;

std::string BeaconClient::get_with_retry(const std::string& path) {
    std::string last_error = "no attempt made";
    auto backoff = config_.initial_backoff;
    for (int attempt = 0; attempt < std::max(1, config_.attempts); ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(origin_);
        client.set_follow_location(true);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.request_timeout);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        auto result = client.Get(path_prefix_ + path);
        if (!result) {
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 500) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200) {
            malformed("beacon answered HTTP " + std::to_string(result->status) + " for " + path);
        }
        return result->body;
    }
    throw Error(ErrorCode::BeaconUnavailable,
                "beacon " + config_.base_url + " unreachable for " + path + ": " + last_error);
}

std::uint64_t BeaconClient::latest_height() {
    if (fixture_) {
        if (!fixture_->tip) {
            malformed("beacon fixture has no tip record");
        }
        return *fixture_->tip;
    }
    const json body = parse_json(get_with_retry("/latestblock"));
    return json_uint(body, "height");
}

BlockHeader BeaconClient::live_header(std::uint64_t height) {
    const json body = parse_json(get_with_retry("/rawblock/" + std::to_string(height)));
    BlockHeader header;
    if (!body.contains("ver") || !body["ver"].is_number_integer()) {
        malformed("beacon response lacks integer field 'ver'");
    }
    // Explorers print version as unsigned; the wire field is the same 32 bits.
    header.version = static_cast<std::int32_t>(static_cast<std::uint32_t>(body["ver"].get<std::int64_t>()));
    header.previous_hash = json_hash(body, "prev_block");
    header.merkle_root = json_hash(body, "mrkl_root");
    header.timestamp = static_cast<std::uint32_t>(json_uint(body, "time"));
    header.bits = static_cast<std::uint32_t>(json_uint(body, "bits"));
    header.nonce = static_cast<std::uint32_t>(json_uint(body, "nonce"));
    header.height = json_uint(body, "height");
    if (header.height != height) {
        malformed("beacon returned height " + std::to_string(header.height) + " for request " +
                  std::to_string(height));
    }
    if (compute_block_hash(header) != json_hash(body, "hash")) {
        malformed("beacon header for height " + std::to_string(height) + " does not hash to its reported hash");
    }
    return header;
}

BlockHeader BeaconClient::header(std::uint64_t height) {
    const std::uint64_t tip = latest_height();
    if (height > tip) {
        throw Error(ErrorCode::BlockNotYetPublished,
                    "block " + std::to_string(height) + " is beyond the tip " + std::to_string(tip));
    }
    if (!fixture_) {
        return live_header(height);
    }
    if (fixture_->conflicts.contains(height)) {
        malformed("beacon fixture has conflicting records for height " + std::to_string(height));
    }
    const auto it = fixture_->records.find(height);
    if (it == fixture_->records.end()) {
        malformed("beacon fixture has no record for height " + std::to_string(height));
    }
    if (compute_block_hash(it->second.header) != it->second.expected_hash) {
        malformed("beacon fixture record " + std::to_string(height) + " does not hash to its recorded hash");
    }
    return it->second.header;
}

std::uint64_t fetch_latest_height(const BeaconConfig& config) {
    BeaconClient client(config);
    return client.latest_height();
}

BlockHeader fetch_header(const BeaconConfig& config, std::uint64_t height) {
    BeaconClient client(config);
    return client.header(height);
}

} // namespace blocklot
