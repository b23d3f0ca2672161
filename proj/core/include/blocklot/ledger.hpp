#pragma once

#include "blocklot/crypto.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace blocklot {

struct LedgerEntry {
    std::string key;
    std::string value;
    std::string tx_id;
    std::uint64_t sequence = 0;

    bool operator==(const LedgerEntry&) const = default;
};

// Hacked-peer model: rewrites the honest value on its way out of the peer.
using Corruption = std::function<std::string(std::string_view key, std::string_view honest_value)>;

// Turns a proposal into the stored value once its tx id is known, for records
// that embed their own transaction id.
using Stamp = std::function<std::string(const std::string& tx_id)>;

struct Write {
    std::string proposal;
    Stamp stamp;
};

// Read-modify-write step run under the sequencer. Receives the ordered
// (authoritative) latest value, or nullptr when the key is absent. Returning
// nullopt commits nothing. Exceptions abort the transaction.
using Transaction = std::function<std::optional<Write>(const std::string* current)>;

struct LedgerConfig {
    std::size_t peer_count = 3;
    // Peer that serves get_state / get_state_by_range (the caller's local peer).
    std::size_t query_peer = 0;
    // When set, each peer appends its log to <data_dir>/<peer_id>.log and logs
    // are replayed on construction.
    std::optional<std::filesystem::path> data_dir;
};

// Append-only key/value store replicated across N in-process peers. Writes are
// linearized by a single sequencer; reads take a shared lock.
class Ledger {
public:
    explicit Ledger(LedgerConfig config = {},
                    std::shared_ptr<EntropySource> entropy = std::make_shared<SystemEntropy>());
    ~Ledger();

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    // tx_id = hex SHA-256(sequence (u64 BE) || key || proposal || 8 random bytes).
    std::string put_state(std::string_view key, std::string value);
    std::string put_state(std::string_view key, std::string proposal, const Stamp& stamp);

    // Returns the tx id of the committed write, if any.
    std::optional<std::string> transact(std::string_view key, const Transaction& tx);

    std::string get_state(std::string_view key) const;
    std::optional<std::string> try_get_state(std::string_view key) const;

    // Latest pairs with start <= key < end in ascending order; an empty bound
    // is unbounded.
    std::vector<std::pair<std::string, std::string>> get_state_by_range(std::string_view start_key,
                                                                        std::string_view end_key) const;

    // Value reported identically by more than N/2 of all configured peers.
    // Crashed peers and peers missing the key are non-votes.
    std::string majority_read(std::string_view key) const;

    // What each peer answers for `key` (nullopt = crashed or absent).
    std::vector<std::optional<std::string>> peer_responses(std::string_view key) const;

    std::size_t peer_count() const noexcept;
    std::string peer_id(std::size_t peer) const;
    std::vector<LedgerEntry> peer_log(std::size_t peer) const;
    std::map<std::string, std::string> peer_state(std::size_t peer) const;
    std::uint64_t last_sequence() const;

    // Fault injection.
    void crash(std::size_t peer);
    // Brings a crashed peer back and replays the writes it missed.
    void restart(std::size_t peer);
    void corrupt(std::size_t peer, Corruption corruption);
    void heal(std::size_t peer);
    bool is_crashed(std::size_t peer) const;

private:
    struct PeerState;

    std::string commit(std::string_view key, std::string proposal, const Stamp& stamp);
    const PeerState& serving_peer() const;
    std::optional<std::string> read_from(const PeerState& peer, std::string_view key) const;
    PeerState& checked_peer(std::size_t peer);
    const PeerState& checked_peer(std::size_t peer) const;
    void replay_logs();

    LedgerConfig config_;
    std::shared_ptr<EntropySource> entropy_;
    mutable std::shared_mutex mutex_;
    std::vector<std::unique_ptr<PeerState>> peers_;
    // Ordering-service view: full history and latest map, independent of any
    // individual peer's faults.
    std::vector<LedgerEntry> history_;
    std::map<std::string, std::string, std::less<>> latest_;
};

} // namespace blocklot
