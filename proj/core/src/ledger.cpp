#include "blocklot/ledger.hpp"

#include "blocklot/bytes.hpp"
#include "blocklot/errors.hpp"

#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>

namespace blocklot {

struct Ledger::PeerState {
    std::string id;
    std::vector<LedgerEntry> log;
    std::map<std::string, std::string, std::less<>> state;
    bool crashed = false;
    Corruption corruption;
    std::optional<std::filesystem::path> file;

    void append(const LedgerEntry& entry) {
        log.push_back(entry);
        state[entry.key] = entry.value;
        if (!file) return;
        std::ofstream out(*file, std::ios::app | std::ios::binary);
        out << entry.key << '\t' << to_hex(as_bytes(entry.value)) << '\t' << entry.tx_id << '\t'
            << entry.sequence << '\n';
        out.flush();
        if (!out) {
            throw Error(ErrorCode::ReplicationFailure, "cannot append to peer log " + file->string());
        }
    }
};

namespace {

[[noreturn]] void bad_log(const std::filesystem::path& path, std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::MalformedRecord,
                path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<LedgerEntry> read_log(const std::filesystem::path& path) {
    std::vector<LedgerEntry> entries;
    std::ifstream in(path, std::ios::binary);
    if (!in) return entries;
    std::string row;
    std::size_t line_no = 0;
    while (std::getline(in, row)) {
        ++line_no;
        if (row.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(row);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() != 4) bad_log(path, line_no, "expected 4 tab-separated columns");

        LedgerEntry entry;
        entry.key = cols[0];
        try {
            const Bytes value = from_hex(cols[1]);
            entry.value.assign(value.begin(), value.end());
        } catch (const Error&) {
            bad_log(path, line_no, "value is not hex");
        }
        entry.tx_id = cols[2];
        const auto& seq = cols[3];
        auto [ptr, ec] = std::from_chars(seq.data(), seq.data() + seq.size(), entry.sequence);
        if (ec != std::errc{} || ptr != seq.data() + seq.size()) bad_log(path, line_no, "bad sequence");
        if (!entries.empty() && entry.sequence <= entries.back().sequence) {
            bad_log(path, line_no, "sequence does not increase");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

} // namespace

Ledger::Ledger(LedgerConfig config, std::shared_ptr<EntropySource> entropy)
    : config_(std::move(config)), entropy_(std::move(entropy)) {
    if (config_.peer_count == 0) {
        throw Error(ErrorCode::InvalidParameter, "ledger needs at least one peer");
    }
    if (config_.query_peer >= config_.peer_count) {
        throw Error(ErrorCode::InvalidParameter, "query peer index out of range");
    }
    if (config_.data_dir) {
        std::filesystem::create_directories(*config_.data_dir);
    }
    for (std::size_t i = 0; i < config_.peer_count; ++i) {
        auto peer = std::make_unique<PeerState>();
        peer->id = "peer" + std::to_string(i);
        if (config_.data_dir) {
            peer->file = *config_.data_dir / (peer->id + ".log");
        }
        peers_.push_back(std::move(peer));
    }
    replay_logs();
}

Ledger::~Ledger() = default;

void Ledger::replay_logs() {
    if (!config_.data_dir) return;
    std::vector<std::vector<LedgerEntry>> logs;
    for (const auto& peer : peers_) {
        logs.push_back(read_log(*peer->file));
    }
    std::size_t longest = 0;
    for (std::size_t i = 1; i < logs.size(); ++i) {
        if (logs[i].size() > logs[longest].size()) longest = i;
    }
    history_ = logs[longest];
    for (const auto& entry : history_) {
        latest_[entry.key] = entry.value;
    }
    for (std::size_t i = 0; i < peers_.size(); ++i) {
        PeerState& peer = *peers_[i];
        const auto& log = logs[i];
        for (std::size_t k = 0; k < log.size(); ++k) {
            if (!(log[k] == history_[k])) {
                throw Error(ErrorCode::MalformedRecord, peer.id + " log diverges from the replicated history");
            }
            peer.log.push_back(log[k]);
            peer.state[log[k].key] = log[k].value;
        }
        // Peers that were down when the process stopped catch up here.
        for (std::size_t k = log.size(); k < history_.size(); ++k) {
            peer.append(history_[k]);
        }
    }
}

Ledger::PeerState& Ledger::checked_peer(std::size_t peer) {
    if (peer >= peers_.size()) {
        throw Error(ErrorCode::InvalidParameter, "no peer with index " + std::to_string(peer));
    }
    return *peers_[peer];
}

const Ledger::PeerState& Ledger::checked_peer(std::size_t peer) const {
    if (peer >= peers_.size()) {
        throw Error(ErrorCode::InvalidParameter, "no peer with index " + std::to_string(peer));
    }
    return *peers_[peer];
}

std::string Ledger::commit(std::string_view key, std::string proposal, const Stamp& stamp) {
    if (key.empty()) {
        throw Error(ErrorCode::InvalidParameter, "ledger key must not be empty");
    }
    if (key.find_first_of("\t\n\r") != std::string_view::npos) {
        throw Error(ErrorCode::InvalidParameter, "ledger key must not contain tabs or newlines");
    }
    std::size_t alive = 0;
    for (const auto& peer : peers_) {
        if (!peer->crashed) ++alive;
    }
    if (2 * alive <= peers_.size()) {
        throw Error(ErrorCode::ReplicationFailure, std::to_string(alive) + " of " +
                                                       std::to_string(peers_.size()) +
                                                       " peers reachable; a majority is required");
    }

    LedgerEntry entry;
    entry.sequence = history_.empty() ? 1 : history_.back().sequence + 1;
    entry.key = std::string(key);

    Bytes material;
    for (int i = 7; i >= 0; --i) {
        material.push_back(static_cast<std::uint8_t>(entry.sequence >> (8 * i)));
    }
    material.insert(material.end(), key.begin(), key.end());
    material.insert(material.end(), proposal.begin(), proposal.end());
    const auto salt = entropy_->draw<8>();
    material.insert(material.end(), salt.begin(), salt.end());
    entry.tx_id = to_hex(sha256(material));

    entry.value = stamp ? stamp(entry.tx_id) : std::move(proposal);

    history_.push_back(entry);
    latest_[entry.key] = entry.value;
    for (auto& peer : peers_) {
        if (!peer->crashed) peer->append(entry);
    }
    return entry.tx_id;
}

std::string Ledger::put_state(std::string_view key, std::string value) {
    std::unique_lock lock(mutex_);
    return commit(key, std::move(value), {});
}

std::string Ledger::put_state(std::string_view key, std::string proposal, const Stamp& stamp) {
    std::unique_lock lock(mutex_);
    return commit(key, std::move(proposal), stamp);
}

std::optional<std::string> Ledger::transact(std::string_view key, const Transaction& tx) {
    std::unique_lock lock(mutex_);
    const auto it = latest_.find(key);
    std::optional<Write> write = tx(it == latest_.end() ? nullptr : &it->second);
    if (!write) return std::nullopt;
    return commit(key, std::move(write->proposal), write->stamp);
}

const Ledger::PeerState& Ledger::serving_peer() const {
    for (std::size_t k = 0; k < peers_.size(); ++k) {
        const PeerState& peer = *peers_[(config_.query_peer + k) % peers_.size()];
        if (!peer.crashed) return peer;
    }
    throw Error(ErrorCode::ReplicationFailure, "no peer is responsive");
}

std::optional<std::string> Ledger::read_from(const PeerState& peer, std::string_view key) const {
    if (peer.crashed) return std::nullopt;
    const auto it = peer.state.find(key);
    if (it == peer.state.end()) return std::nullopt;
    if (peer.corruption) return peer.corruption(key, it->second);
    return it->second;
}

std::optional<std::string> Ledger::try_get_state(std::string_view key) const {
    std::shared_lock lock(mutex_);
    return read_from(serving_peer(), key);
}

std::string Ledger::get_state(std::string_view key) const {
    auto value = try_get_state(key);
    if (!value) {
        throw Error(ErrorCode::KeyNotFound, "no ledger entry for key '" + std::string(key) + "'");
    }
    return std::move(*value);
}

std::vector<std::pair<std::string, std::string>> Ledger::get_state_by_range(std::string_view start_key,
                                                                            std::string_view end_key) const {
    std::shared_lock lock(mutex_);
    const PeerState& peer = serving_peer();
    auto it = start_key.empty() ? peer.state.begin() : peer.state.lower_bound(start_key);
    const auto last = end_key.empty() ? peer.state.end() : peer.state.lower_bound(end_key);
    std::vector<std::pair<std::string, std::string>> out;
    if (!start_key.empty() && !end_key.empty() && end_key < start_key) return out;
    for (; it != last; ++it) {
        out.emplace_back(it->first, peer.corruption ? peer.corruption(it->first, it->second) : it->second);
    }
    return out;
}

std::vector<std::optional<std::string>> Ledger::peer_responses(std::string_view key) const {
    std::shared_lock lock(mutex_);
    std::vector<std::optional<std::string>> out;
    for (const auto& peer : peers_) {
        out.push_back(read_from(*peer, key));
    }
    return out;
}

std::string Ledger::majority_read(std::string_view key) const {
    const auto responses = peer_responses(key);
    std::map<std::string, std::size_t> votes;
    for (const auto& response : responses) {
        if (response) ++votes[*response];
    }
    for (auto& [value, count] : votes) {
        if (2 * count > responses.size()) return value;
    }
    throw Error(ErrorCode::NoMajority, "no value for '" + std::string(key) + "' is reported by more than " +
                                           std::to_string(responses.size() / 2) + " of " +
                                           std::to_string(responses.size()) + " peers");
}

std::size_t Ledger::peer_count() const noexcept {
    return peers_.size();
}

std::string Ledger::peer_id(std::size_t peer) const {
    return checked_peer(peer).id;
}

std::vector<LedgerEntry> Ledger::peer_log(std::size_t peer) const {
    std::shared_lock lock(mutex_);
    return checked_peer(peer).log;
}

std::map<std::string, std::string> Ledger::peer_state(std::size_t peer) const {
    std::shared_lock lock(mutex_);
    const auto& state = checked_peer(peer).state;
    return {state.begin(), state.end()};
}

std::uint64_t Ledger::last_sequence() const {
    std::shared_lock lock(mutex_);
    return history_.empty() ? 0 : history_.back().sequence;
}

void Ledger::crash(std::size_t peer) {
    std::unique_lock lock(mutex_);
    checked_peer(peer).crashed = true;
}

void Ledger::restart(std::size_t peer) {
    std::unique_lock lock(mutex_);
    PeerState& state = checked_peer(peer);
    state.crashed = false;
    const std::uint64_t have = state.log.empty() ? 0 : state.log.back().sequence;
    for (const auto& entry : history_) {
        if (entry.sequence > have) state.append(entry);
    }
}

void Ledger::corrupt(std::size_t peer, Corruption corruption) {
    std::unique_lock lock(mutex_);
    checked_peer(peer).corruption = std::move(corruption);
}

void Ledger::heal(std::size_t peer) {
    std::unique_lock lock(mutex_);
    checked_peer(peer).corruption = nullptr;
}

bool Ledger::is_crashed(std::size_t peer) const {
    std::shared_lock lock(mutex_);
    return checked_peer(peer).crashed;
}

} // namespace blocklot
