#pragma once

#include "blocklot/bytes.hpp"
#include "blocklot/crypto.hpp"
#include "blocklot/time.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blocklot {

inline constexpr std::size_t kTokenSize = 16;
inline constexpr std::string_view kDefaultChannel = "blocklot";

struct AuthToken {
    std::array<std::uint8_t, kTokenSize> bytes{};

    static AuthToken generate(EntropySource& entropy);
    static AuthToken from_hex(std::string_view hex);
    std::string hex() const { return to_hex(bytes); }

    auto operator<=>(const AuthToken&) const = default;
};

// SHA-256(identity bytes || raw token bytes), no separator.
struct ParticipantDigest {
    Hash256 value{};

    static ParticipantDigest of(std::string_view identity, const AuthToken& token);
    static ParticipantDigest from_hex(std::string_view hex);
    std::string hex() const { return to_hex(value); }

    auto operator<=>(const ParticipantDigest&) const = default;
};

// hmac_part = HMAC-SHA-256(initial_random_key, random_seed)
// info_part = SHA-256(canonical_serialize(event))
struct VerifiableRandomKey {
    Hash256 hmac_part{};
    Hash256 info_part{};

    std::array<std::uint8_t, 64> bytes() const;
    std::string hex() const { return to_hex(bytes()); }
    static VerifiableRandomKey from_hex(std::string_view hex);

    bool operator==(const VerifiableRandomKey&) const = default;
};

enum class EventStatus { Registered, Drawn };

std::string_view to_string(EventStatus status) noexcept;

// Full on-ledger record of one lottery. Optional fields are the ones that
// read UNDEFINED until the draw.
struct LotteryEvent {
    std::string event_id;
    std::string name;
    Timestamp announcement_date{};
    std::uint32_t num_winners = 1;
    std::uint64_t block_offset = 0;
    std::uint64_t target_height = 0;
    std::string note;
    std::string channel_id{kDefaultChannel};
    std::string open_tx_id;
    std::vector<std::string> subscribe_tx_ids;
    std::optional<std::string> draw_tx_id;
    std::vector<ParticipantDigest> member_list;
    std::vector<ParticipantDigest> winner_list;
    std::optional<VerifiableRandomKey> verifiable_random_key;
    std::optional<Hash256> random_seed;
    Hash256 initial_random_key{};
    EventStatus status = EventStatus::Registered;
    // SHA-256 of the organizer token; gates draw.
    Hash256 organizer_digest{};

    bool operator==(const LotteryEvent&) const = default;
};

// Returns one message per violated structural invariant; empty when valid.
std::vector<std::string> invariant_violations(const LotteryEvent& event);

struct OpenRequest {
    std::string name;
    Timestamp announcement_date{};
    std::uint32_t num_winners = 1;
    std::uint64_t block_offset = 0;
    std::string note;
    std::string channel_id{kDefaultChannel};
};

struct OpenedEvent {
    LotteryEvent event;
    AuthToken organizer_token;
};

// The open transaction's tx id is left empty; the ledger stamps it.
OpenedEvent open_event(const OpenRequest& request, std::uint64_t latest_height, Timestamp now,
                       EntropySource& entropy);

struct Subscription {
    LotteryEvent event;
    AuthToken token;
    ParticipantDigest digest;
};

// Appends the new digest to member_list. The matching subscribe tx id is
// appended by the caller once the ledger assigns it.
Subscription subscribe(LotteryEvent event, std::string_view identity, Timestamp now,
                       EntropySource& entropy);

// Same as above with a caller-chosen token (test mode / replay).
Subscription subscribe_with_token(LotteryEvent event, std::string_view identity, Timestamp now,
                                  const AuthToken& token);

struct OracleOutput {
    std::uint32_t value = 0;
    Hash256 next_source{};
};

// d = SHA-256(source); value = wrapping sum of the little-endian u32 words
// d[0..4], d[4..8], d[8..12], d[12..16]; next_source = d.
OracleOutput random_oracle(const Hash256& source);

// Ascending Fisher-Yates driven by random_oracle chaining from `seed`:
// for i in 0..P-1, j = i + value mod (P - i), swap(A[i], A[j]).
// Returns the full permutation.
std::vector<ParticipantDigest> shuffle_members(std::span<const ParticipantDigest> members,
                                               const Hash256& seed);

// First `num_winners` entries of shuffle_members. Throws EmptyEvent when the
// list is empty and TooManyWinners when num_winners exceeds it.
std::vector<ParticipantDigest> fisher_yates_draw(std::span<const ParticipantDigest> members,
                                                 std::size_t num_winners, const Hash256& seed);

bool organizer_token_matches(const LotteryEvent& event, const AuthToken& token);

// Requires random_seed to be set; throws NotDrawn otherwise.
VerifiableRandomKey derive_verifiable_key(const LotteryEvent& event);
VerifiableRandomKey derive_verifiable_key(const LotteryEvent& event,
                                          const Hash256& initial_random_key);

// Validates the organizer token, draws winners from `seed`, records the draw
// tx id and seals the event with its verifiable key.
LotteryEvent apply_draw(LotteryEvent event, const AuthToken& organizer_token, const Hash256& seed,
                        std::string draw_tx_id);

bool check_winner(const LotteryEvent& event, std::string_view identity, const AuthToken& token);

} // namespace blocklot
