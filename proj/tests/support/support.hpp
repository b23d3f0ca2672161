#pragma once

#include "blocklot/beacon.hpp"
#include "blocklot/errors.hpp"
#include "blocklot/lottery.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace blocklot::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(BLOCKLOT_FIXTURE_DIR) / name;
}

inline BeaconConfig fixture_config(const std::string& name) {
    BeaconConfig config;
    config.mode = BeaconMode::Fixture;
    config.fixture_path = fixture(name);
    return config;
}

// Fixture-backed chain whose visible tip the test moves by hand.
class ScriptedChain final : public BlockSource {
public:
    ScriptedChain(const std::string& fixture_name, std::uint64_t tip)
        : inner_(fixture_config(fixture_name)), tip_(tip) {}

    void set_tip(std::uint64_t tip) { tip_ = tip; }

    std::uint64_t latest_height() override { return tip_; }

    BlockHeader header(std::uint64_t height) override {
        if (height > tip_) {
            throw Error(ErrorCode::BlockNotYetPublished, "height " + std::to_string(height) + " not yet mined");
        }
        return inner_.header(height);
    }

private:
    BeaconClient inner_;
    std::atomic<std::uint64_t> tip_;
};

class ManualClock {
public:
    explicit ManualClock(Timestamp start) : now_(start) {}
    Timestamp operator()() const {
        std::lock_guard lock(mutex_);
        return now_;
    }
    void set(Timestamp t) {
        std::lock_guard lock(mutex_);
        now_ = t;
    }

private:
    mutable std::mutex mutex_;
    Timestamp now_;
};

inline Hash256 random_hash(std::mt19937_64& rng) {
    Hash256 out{};
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

inline std::vector<ParticipantDigest> random_members(std::mt19937_64& rng, std::size_t count) {
    std::vector<ParticipantDigest> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(ParticipantDigest{random_hash(rng)});
    return out;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::string alphabet = "abcXYZ 019_-,=\\\n\r\t\xc3\xa9";
    std::string out;
    const std::size_t len = rng() % (max_len + 1);
    for (std::size_t i = 0; i < len; ++i) out.push_back(alphabet[rng() % alphabet.size()]);
    return out;
}

struct FuzzedEvent {
    LotteryEvent event;
    AuthToken organizer_token;
};

// A drawn event with random fields, built through the public transactions.
inline FuzzedEvent random_drawn_event(std::mt19937_64& rng, std::optional<Hash256> seed = std::nullopt,
                                      std::optional<std::uint64_t> target_height = std::nullopt) {
    DeterministicEntropy entropy(std::to_string(rng()));
    const Timestamp now = parse_utc("2024-01-01T00:00:00Z") + std::chrono::seconds(rng() % 1'000'000);
    OpenRequest req;
    req.name = "ev" + random_text(rng, 12);
    req.announcement_date = now + std::chrono::hours(1 + rng() % 100);
    req.note = random_text(rng, 20);
    const std::size_t participants = 1 + rng() % 12;
    req.num_winners = static_cast<std::uint32_t>(1 + rng() % participants);
    req.block_offset = rng() % 50;
    const std::uint64_t latest = target_height ? *target_height : rng() % 800'000;
    if (target_height) req.block_offset = 0;
    OpenedEvent opened = open_event(req, latest, now, entropy);
    LotteryEvent event = opened.event;
    event.open_tx_id = to_hex(random_hash(rng));
    for (std::size_t i = 0; i < participants; ++i) {
        Subscription sub = subscribe(event, "member-" + std::to_string(i) + random_text(rng, 4), now, entropy);
        event = sub.event;
        event.subscribe_tx_ids.push_back(to_hex(random_hash(rng)));
    }
    event = apply_draw(event, opened.organizer_token, seed ? *seed : random_hash(rng), to_hex(random_hash(rng)));
    return {event, opened.organizer_token};
}

// One mutation per stored field, each guaranteed to change the value.
using Mutation = std::pair<std::string, std::function<void(LotteryEvent&)>>;

inline std::vector<Mutation> single_field_mutations() {
    const auto flip = [](Hash256& h) { h[5] ^= 0x40; };
    return {
        {"event_id", [](LotteryEvent& e) { e.event_id.back() = e.event_id.back() == '0' ? '1' : '0'; }},
        {"name", [](LotteryEvent& e) { e.name += "x"; }},
        {"announcement_date", [](LotteryEvent& e) { e.announcement_date += std::chrono::seconds(1); }},
        {"num_winners", [](LotteryEvent& e) { e.num_winners += 1; }},
        {"block_offset", [](LotteryEvent& e) { e.block_offset += 1; }},
        {"target_height", [](LotteryEvent& e) { e.target_height += 1; }},
        {"note", [](LotteryEvent& e) { e.note += "!"; }},
        {"channel_id", [](LotteryEvent& e) { e.channel_id += "2"; }},
        {"open_tx_id", [](LotteryEvent& e) { e.open_tx_id += "0"; }},
        {"subscribe_tx_ids", [](LotteryEvent& e) { e.subscribe_tx_ids.front() += "0"; }},
        {"draw_tx_id", [](LotteryEvent& e) { *e.draw_tx_id += "0"; }},
        {"member_list", [flip](LotteryEvent& e) { flip(e.member_list.back().value); }},
        {"winner_list", [flip](LotteryEvent& e) { flip(e.winner_list.front().value); }},
        {"verifiable_random_key", [flip](LotteryEvent& e) { flip(e.verifiable_random_key->hmac_part); }},
        {"random_seed", [flip](LotteryEvent& e) { flip(*e.random_seed); }},
        {"initial_random_key", [flip](LotteryEvent& e) { flip(e.initial_random_key); }},
        {"status", [](LotteryEvent& e) { e.status = EventStatus::Registered; }},
        {"organizer_digest", [flip](LotteryEvent& e) { flip(e.organizer_digest); }},
    };
}

} // namespace blocklot::testing
