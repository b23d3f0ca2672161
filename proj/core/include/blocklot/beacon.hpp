#pragma once

#include "blocklot/bytes.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace blocklot {

// Hash fields are held in display order (the big-endian form explorers show).
struct BlockHeader {
    std::int32_t version = 0;
    Hash256 previous_hash{};
    Hash256 merkle_root{};
    std::uint32_t timestamp = 0;
    std::uint32_t bits = 0;
    std::uint32_t nonce = 0;
    std::uint64_t height = 0;

    bool operator==(const BlockHeader&) const = default;
};

// 80-byte wire form: integers little-endian, hashes byte-reversed.
std::array<std::uint8_t, 80> serialize_header(const BlockHeader& header);

// Double SHA-256 of the wire form, returned in display order.
Hash256 compute_block_hash(const BlockHeader& header);

bool verify_seed(const BlockHeader& header, const Hash256& claimed_seed);

enum class BeaconMode { Live, Fixture };

struct BeaconConfig {
    BeaconMode mode = BeaconMode::Fixture;
    std::string base_url = "https://blockchain.info";
    std::filesystem::path fixture_path;
    std::chrono::milliseconds request_timeout{10'000};
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1'000};

    // BLOCKLOT_BEACON_MODE (live|fixture), BLOCKLOT_BEACON_URL,
    // BLOCKLOT_BEACON_FIXTURE.
    static BeaconConfig from_env();
};

BeaconMode parse_beacon_mode(std::string_view text);

struct FixtureRecord {
    BlockHeader header;
    Hash256 expected_hash{};
};

// One record per line:
//   height,version,previous_hash_hex,merkle_root_hex,timestamp,bits,nonce,expected_hash_hex
// plus a single `tip,<height>` record. Blank lines and `#` comments are
// ignored. A height listed twice with different data is remembered as
// conflicting rather than rejected.
struct Fixture {
    std::optional<std::uint64_t> tip;
    std::map<std::uint64_t, FixtureRecord> records;
    std::set<std::uint64_t> conflicts;

    static Fixture parse(std::string_view text);
    static Fixture load(const std::filesystem::path& path);
};

// Chain view the service draws from.
class BlockSource {
public:
    virtual ~BlockSource() = default;
    virtual std::uint64_t latest_height() = 0;
    // Throws BlockNotYetPublished beyond the tip. The returned header has been
    // checked against the hash the source reported for it.
    virtual BlockHeader header(std::uint64_t height) = 0;
};

class BeaconClient final : public BlockSource {
public:
    explicit BeaconClient(BeaconConfig config);
    ~BeaconClient() override;

    std::uint64_t latest_height() override;
    BlockHeader header(std::uint64_t height) override;

    const BeaconConfig& config() const noexcept { return config_; }

private:
    std::string get_with_retry(const std::string& path);
    BlockHeader live_header(std::uint64_t height);

    BeaconConfig config_;
    std::optional<Fixture> fixture_;
    std::string origin_;
    std::string path_prefix_;
};

std::uint64_t fetch_latest_height(const BeaconConfig& config);
BlockHeader fetch_header(const BeaconConfig& config, std::uint64_t height);

} // namespace blocklot
