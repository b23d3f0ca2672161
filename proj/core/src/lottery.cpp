#include "blocklot/lottery.hpp"

#include "blocklot/errors.hpp"
#include "blocklot/serialize.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <set>
#include <utility>

namespace blocklot {

namespace {

Hash256 token_digest(const AuthToken& token) {
    return sha256(token.bytes);
}

std::uint32_t load_le32(const std::uint8_t* p) noexcept {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string make_event_id(const OpenRequest& request, Timestamp now, EntropySource& entropy) {
    const auto salt = entropy.draw<8>();
    std::string material = request.name;
    material += format_utc(request.announcement_date);
    material += format_utc(now);
    material.append(reinterpret_cast<const char*>(salt.data()), salt.size());
    const Hash256 digest = sha256(material);
    return to_hex(std::span<const std::uint8_t>(digest.data(), 16));
}

} // namespace

AuthToken AuthToken::generate(EntropySource& entropy) {
    return AuthToken{entropy.draw<kTokenSize>()};
}

AuthToken AuthToken::from_hex(std::string_view hex) {
    return AuthToken{fixed_from_hex<kTokenSize>(hex)};
}

ParticipantDigest ParticipantDigest::of(std::string_view identity, const AuthToken& token) {
    Bytes material(identity.begin(), identity.end());
    material.insert(material.end(), token.bytes.begin(), token.bytes.end());
    return ParticipantDigest{sha256(material)};
}

ParticipantDigest ParticipantDigest::from_hex(std::string_view hex) {
    return ParticipantDigest{fixed_from_hex<32>(hex)};
}

std::array<std::uint8_t, 64> VerifiableRandomKey::bytes() const {
    std::array<std::uint8_t, 64> out{};
    std::copy(hmac_part.begin(), hmac_part.end(), out.begin());
    std::copy(info_part.begin(), info_part.end(), out.begin() + 32);
    return out;
}

VerifiableRandomKey VerifiableRandomKey::from_hex(std::string_view hex) {
    const auto raw = fixed_from_hex<64>(hex);
    VerifiableRandomKey key;
    std::copy_n(raw.begin(), 32, key.hmac_part.begin());
    std::copy_n(raw.begin() + 32, 32, key.info_part.begin());
    return key;
}

std::string_view to_string(EventStatus status) noexcept {
    return status == EventStatus::Drawn ? "DRAWN" : "REGISTERED";
}

std::vector<std::string> invariant_violations(const LotteryEvent& event) {
    std::vector<std::string> out;
    if (event.num_winners < 1) {
        out.emplace_back("num_winners must be at least 1");
    }
    if (event.subscribe_tx_ids.size() != event.member_list.size()) {
        out.emplace_back("subscribe_tx_ids and member_list differ in length");
    }
    const std::set<ParticipantDigest> members(event.member_list.begin(), event.member_list.end());
    if (members.size() != event.member_list.size()) {
        out.emplace_back("member_list contains a duplicate digest");
    }

    if (event.status == EventStatus::Registered) {
        if (event.draw_tx_id) out.emplace_back("REGISTERED event has a draw tx id");
        if (!event.winner_list.empty()) out.emplace_back("REGISTERED event has winners");
        return out;
    }

    if (!event.draw_tx_id) out.emplace_back("DRAWN event has no draw tx id");
    if (!event.random_seed) out.emplace_back("DRAWN event has no random seed");
    if (event.num_winners > event.member_list.size()) {
        out.emplace_back("num_winners exceeds participant count");
    }
    if (event.winner_list.size() != event.num_winners) {
        out.emplace_back("winner_list length differs from num_winners");
    }
    std::set<ParticipantDigest> seen;
    for (const auto& winner : event.winner_list) {
        if (!members.contains(winner)) out.emplace_back("winner " + winner.hex() + " is not a member");
        if (!seen.insert(winner).second) out.emplace_back("winner " + winner.hex() + " listed twice");
    }
    return out;
}

OpenedEvent open_event(const OpenRequest& request, std::uint64_t latest_height, Timestamp now,
                       EntropySource& entropy) {
    if (request.num_winners < 1) {
        throw Error(ErrorCode::InvalidParameter, "num_winners must be at least 1");
    }
    if (request.name.empty()) {
        throw Error(ErrorCode::InvalidParameter, "name must not be empty");
    }
    if (request.channel_id.empty()) {
        throw Error(ErrorCode::InvalidParameter, "channel_id must not be empty");
    }

    OpenedEvent opened;
    LotteryEvent& event = opened.event;
    event.event_id = make_event_id(request, now, entropy);
    event.name = request.name;
    event.announcement_date = request.announcement_date;
    event.num_winners = request.num_winners;
    event.block_offset = request.block_offset;
    event.target_height = latest_height + request.block_offset;
    event.note = request.note;
    event.channel_id = request.channel_id;
    event.initial_random_key = entropy.draw<32>();
    event.status = EventStatus::Registered;

    opened.organizer_token = AuthToken::generate(entropy);
    event.organizer_digest = token_digest(opened.organizer_token);
    return opened;
}

Subscription subscribe_with_token(LotteryEvent event, std::string_view identity, Timestamp now,
                                  const AuthToken& token) {
    if (identity.empty()) {
        throw Error(ErrorCode::InvalidParameter, "identity must not be empty");
    }
    if (event.status != EventStatus::Registered) {
        throw Error(ErrorCode::AlreadyDrawn, "event " + event.event_id + " is already drawn");
    }
    if (now >= event.announcement_date) {
        throw Error(ErrorCode::PastDeadline, "subscription closed at " + format_utc(event.announcement_date));
    }
    const ParticipantDigest digest = ParticipantDigest::of(identity, token);
    if (std::find(event.member_list.begin(), event.member_list.end(), digest) != event.member_list.end()) {
        throw Error(ErrorCode::DuplicateMember, "participant digest already registered");
    }
    event.member_list.push_back(digest);
    return Subscription{std::move(event), token, digest};
}

Subscription subscribe(LotteryEvent event, std::string_view identity, Timestamp now,
                       EntropySource& entropy) {
    return subscribe_with_token(std::move(event), identity, now, AuthToken::generate(entropy));
}

OracleOutput random_oracle(const Hash256& source) {
    OracleOutput out;
    out.next_source = sha256(source);
    std::uint32_t sum = 0;
    for (int word = 0; word < 4; ++word) {
        sum += load_le32(out.next_source.data() + 4 * word);  // wraps mod 2^32
    }
    out.value = sum;
    return out;
}

std::vector<ParticipantDigest> shuffle_members(std::span<const ParticipantDigest> members,
                                               const Hash256& seed) {
    std::vector<ParticipantDigest> array(members.begin(), members.end());
    const std::size_t count = array.size();
    Hash256 source = seed;
    for (std::size_t i = 0; i < count; ++i) {
        const OracleOutput step = random_oracle(source);
        const std::size_t j = i + static_cast<std::size_t>(step.value % (count - i));
        std::swap(array[i], array[j]);
        source = step.next_source;
    }
    return array;
}

std::vector<ParticipantDigest> fisher_yates_draw(std::span<const ParticipantDigest> members,
                                                 std::size_t num_winners, const Hash256& seed) {
    if (members.empty()) {
        throw Error(ErrorCode::EmptyEvent, "cannot draw from an event without participants");
    }
    if (num_winners > members.size()) {
        throw Error(ErrorCode::TooManyWinners, std::to_string(num_winners) + " winners requested from " +
                                                   std::to_string(members.size()) + " participants");
    }
    if (num_winners == 0) {
        throw Error(ErrorCode::InvalidParameter, "num_winners must be at least 1");
    }
    std::vector<ParticipantDigest> shuffled = shuffle_members(members, seed);
    shuffled.resize(num_winners);
    return shuffled;
}

bool organizer_token_matches(const LotteryEvent& event, const AuthToken& token) {
    const Hash256 digest = token_digest(token);
    return CRYPTO_memcmp(digest.data(), event.organizer_digest.data(), digest.size()) == 0;
}

VerifiableRandomKey derive_verifiable_key(const LotteryEvent& event,
                                          const Hash256& initial_random_key) {
    if (!event.random_seed) {
        throw Error(ErrorCode::NotDrawn, "event " + event.event_id + " has no random seed yet");
    }
    VerifiableRandomKey key;
    key.hmac_part = hmac_sha256(initial_random_key, *event.random_seed);
    key.info_part = sha256(canonical_serialize(event));
    return key;
}

VerifiableRandomKey derive_verifiable_key(const LotteryEvent& event) {
    return derive_verifiable_key(event, event.initial_random_key);
}

LotteryEvent apply_draw(LotteryEvent event, const AuthToken& organizer_token, const Hash256& seed,
                        std::string draw_tx_id) {
    if (event.status == EventStatus::Drawn) {
        throw Error(ErrorCode::AlreadyDrawn, "event " + event.event_id + " is already drawn");
    }
    if (!organizer_token_matches(event, organizer_token)) {
        throw Error(ErrorCode::BadToken, "organizer token does not match");
    }
    event.winner_list = fisher_yates_draw(event.member_list, event.num_winners, seed);
    event.random_seed = seed;
    event.draw_tx_id = std::move(draw_tx_id);
    event.status = EventStatus::Drawn;
    event.verifiable_random_key = derive_verifiable_key(event);
    return event;
}

bool check_winner(const LotteryEvent& event, std::string_view identity, const AuthToken& token) {
    if (event.status != EventStatus::Drawn) {
        throw Error(ErrorCode::NotDrawn, "event " + event.event_id + " has not been drawn");
    }
    const ParticipantDigest digest = ParticipantDigest::of(identity, token);
    return std::find(event.winner_list.begin(), event.winner_list.end(), digest) != event.winner_list.end();
}

} // namespace blocklot
