#pragma once

#include "blocklot/beacon.hpp"
#include "blocklot/ledger.hpp"
#include "blocklot/lottery.hpp"
#include "blocklot/verification.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace blocklot {

struct ServiceConfig {
    std::string listen_address = "127.0.0.1";
    int port = 8080;
    std::size_t peer_count = 3;
    BeaconConfig beacon;
    std::uint64_t confirmation_depth = 6;
    std::string channel_id{kDefaultChannel};
    // Reject a second subscription from an identical identity string. Tracked
    // in service memory only, never on the ledger.
    bool strict_identities = false;
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> ui_dir;
    std::size_t worker_threads = 16;
    // One JSON line per request on stderr.
    bool access_log = true;
    // Extra beacon polls when a draw is blocked only by block lag.
    int lag_repoll_attempts = 2;
    std::chrono::milliseconds lag_repoll_backoff{1'000};

    // BLOCKLOT_LISTEN, BLOCKLOT_PORT, BLOCKLOT_PEERS, BLOCKLOT_CONFIRMATIONS,
    // BLOCKLOT_DATA_DIR, BLOCKLOT_UI_DIR,
    // BLOCKLOT_STRICT_IDENTITIES, BLOCKLOT_WORKERS, BLOCKLOT_ACCESS_LOG plus the beacon variables.
    static ServiceConfig from_env();

    // Throws InvalidParameter unless peer_count is odd and >= 1.
    void validate() const;
};

using Clock = std::function<Timestamp()>;

// Event as shown to anyone: no tokens, no initial random key.
struct PublicEventView {
    LotteryEvent event;  // secrets zeroed
    std::size_t participant_count = 0;
    bool date_reached = false;
    bool target_block_reached = false;
    bool draw_available = false;
};

struct OpenResult {
    std::string event_id;
    AuthToken organizer_token;
    Hash256 initial_random_key{};
    std::uint64_t target_height = 0;
    std::string open_tx_id;
};

struct SubscribeResult {
    std::string event_id;
    AuthToken token;
    ParticipantDigest digest;
    std::string tx_id;
};

struct DrawResult {
    LotteryEvent event;
    bool already_drawn = false;
};

// The six lottery transactions over the replicated ledger. Transport-free;
// HttpServer maps it onto HTTP.
class LotteryService {
public:
    LotteryService(ServiceConfig config, std::shared_ptr<BlockSource> beacon,
                   std::shared_ptr<EntropySource> entropy = std::make_shared<SystemEntropy>(),
                   Clock clock = utc_now);

    OpenResult open(const OpenRequest& request);
    std::vector<PublicEventView> query();
    std::optional<PublicEventView> find(const std::string& event_id);
    SubscribeResult subscribe(const std::string& event_id, const std::string& identity);
    DrawResult draw(const std::string& event_id, const AuthToken& organizer_token);
    bool check(const std::string& event_id, const std::string& identity, const AuthToken& token);
    VerificationReport verify(const std::string& event_id);
    // Organizer-authenticated export of the full record (export_event format).
    std::string export_record(const std::string& event_id, const AuthToken& organizer_token);

    Ledger& ledger() noexcept { return ledger_; }
    const ServiceConfig& config() const noexcept { return config_; }

private:
    LotteryEvent load(const std::string& event_id) const;
    PublicEventView make_view(const LotteryEvent& event, Timestamp now,
                              std::optional<std::uint64_t> tip) const;
    std::optional<std::uint64_t> cached_tip();
    std::uint64_t wait_for_confirmations(std::uint64_t required);

    ServiceConfig config_;
    std::shared_ptr<BlockSource> beacon_;
    std::shared_ptr<EntropySource> entropy_;
    Clock clock_;
    Ledger ledger_;

    std::mutex identities_mutex_;
    std::unordered_map<std::string, std::set<std::string>> identities_;

    std::mutex tip_mutex_;
    std::optional<std::uint64_t> tip_;
    std::chrono::steady_clock::time_point tip_fetched_{};
};

int http_status(ErrorCode code) noexcept;

// Routes:
//   POST /events                 open
//   GET  /events                 query
//   GET  /events/{id}            single public view
//   POST /events/{id}/subscribe  subscribe
//   POST /events/{id}/draw       draw
//   GET  /events/{id}/check      check (?identity=&token=)
//   GET  /events/{id}/verify     verify
//   GET  /events/{id}/export     export (?token=<organizer token>)
//   GET  /ui/...                 static assets when ui_dir is configured
class HttpServer {
public:
    explicit HttpServer(LotteryService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds to `port` (0 picks a free port) and returns the bound port.
    int bind(const std::string& address, int port);
    // Blocks until stop().
    void serve();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace blocklot
