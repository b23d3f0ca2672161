#include "blocklot/service.hpp"

#include "blocklot/errors.hpp"
#include "blocklot/serialize.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace blocklot {

namespace {

constexpr auto kTipCacheTtl = std::chrono::seconds(5);

std::optional<std::string> env(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

template <typename T>
T env_number(const char* name, T fallback) {
    const auto text = env(name);
    if (!text) return fallback;
    T value{};
    auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), value);
    if (ec != std::errc{} || ptr != text->data() + text->size()) {
        throw Error(ErrorCode::InvalidParameter, std::string(name) + " is not a number: " + *text);
    }
    return value;
}

bool env_flag(const char* name) {
    const auto text = env(name);
    return text && (*text == "1" || *text == "true" || *text == "yes" || *text == "on");
}

} // namespace

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig config;
    config.beacon = BeaconConfig::from_env();
    if (auto v = env("BLOCKLOT_LISTEN")) config.listen_address = *v;
    config.port = env_number<int>("BLOCKLOT_PORT", config.port);
    config.peer_count = env_number<std::size_t>("BLOCKLOT_PEERS", config.peer_count);
    config.confirmation_depth = env_number<std::uint64_t>("BLOCKLOT_CONFIRMATIONS", config.confirmation_depth);
    if (auto v = env("BLOCKLOT_DATA_DIR")) config.data_dir = *v;
    if (auto v = env("BLOCKLOT_UI_DIR")) config.ui_dir = *v;
    config.strict_identities = env_flag("BLOCKLOT_STRICT_IDENTITIES");
    config.worker_threads = env_number<std::size_t>("BLOCKLOT_WORKERS", config.worker_threads);
    if (auto v = env("BLOCKLOT_ACCESS_LOG")) config.access_log = env_flag("BLOCKLOT_ACCESS_LOG");
    return config;
}

void ServiceConfig::validate() const {
    if (peer_count < 1 || peer_count % 2 == 0) {
        throw Error(ErrorCode::InvalidParameter, "peer count must be odd and at least 1, got " +
                                                     std::to_string(peer_count));
    }
    if (worker_threads == 0) {
        throw Error(ErrorCode::InvalidParameter, "worker thread count must be at least 1");
    }
    if (channel_id.empty()) {
        throw Error(ErrorCode::InvalidParameter, "channel id must not be empty");
    }
}

LotteryService::LotteryService(ServiceConfig config, std::shared_ptr<BlockSource> beacon,
                               std::shared_ptr<EntropySource> entropy, Clock clock)
    : config_((config.validate(), std::move(config))),
      beacon_(std::move(beacon)),
      entropy_(std::move(entropy)),
      clock_(std::move(clock)),
      ledger_(LedgerConfig{config_.peer_count, 0, config_.data_dir}, entropy_) {
    if (!beacon_) {
        throw Error(ErrorCode::InvalidParameter, "service needs a block source");
    }
}

LotteryEvent LotteryService::load(const std::string& event_id) const {
    auto raw = ledger_.try_get_state(event_id);
    if (!raw) {
        throw Error(ErrorCode::NotFound, "no event with id " + event_id);
    }
    return parse_event(*raw);
}

std::optional<std::uint64_t> LotteryService::cached_tip() {
    std::lock_guard lock(tip_mutex_);
    const auto now = std::chrono::steady_clock::now();
    if (tip_ && now - tip_fetched_ < kTipCacheTtl) return tip_;
    try {
        tip_ = beacon_->latest_height();
        tip_fetched_ = now;
    } catch (const Error&) {
        // keep the last known tip; readers only use it for availability flags
    }
    return tip_;
}

PublicEventView LotteryService::make_view(const LotteryEvent& event, Timestamp now,
                                          std::optional<std::uint64_t> tip) const {
    PublicEventView view;
    view.event = event;
    view.event.initial_random_key = {};
    view.event.organizer_digest = {};
    view.participant_count = event.member_list.size();
    view.date_reached = now >= event.announcement_date;
    view.target_block_reached = tip && *tip >= event.target_height + config_.confirmation_depth;
    view.draw_available = event.status == EventStatus::Registered && view.date_reached && view.target_block_reached;
    return view;
}

OpenResult LotteryService::open(const OpenRequest& request) {
    OpenRequest req = request;
    req.channel_id = config_.channel_id;
    const std::uint64_t latest = beacon_->latest_height();
    OpenedEvent opened = open_event(req, latest, clock_(), *entropy_);

    LotteryEvent stored;
    const auto tx = ledger_.transact(opened.event.event_id, [&](const std::string* current) -> std::optional<Write> {
        if (current != nullptr) {
            throw Error(ErrorCode::InvalidParameter, "event id collision, retry the open");
        }
        return Write{export_event(opened.event), [&](const std::string& tx_id) {
                         stored = opened.event;
                         stored.open_tx_id = tx_id;
                         return export_event(stored);
                     }};
    });

    OpenResult result;
    result.event_id = stored.event_id;
    result.organizer_token = opened.organizer_token;
    result.initial_random_key = stored.initial_random_key;
    result.target_height = stored.target_height;
    result.open_tx_id = tx.value_or("");
    return result;
}

std::vector<PublicEventView> LotteryService::query() {
    const Timestamp now = clock_();
    const auto tip = cached_tip();
    std::vector<PublicEventView> views;
    for (const auto& [key, value] : ledger_.get_state_by_range("", "")) {
        try {
            views.push_back(make_view(parse_event(value), now, tip));
        } catch (const Error& e) {
            std::cerr << "skipping unreadable ledger entry " << key << ": " << e.what() << '\n';
        }
    }
    return views;
}

std::optional<PublicEventView> LotteryService::find(const std::string& event_id) {
    auto raw = ledger_.try_get_state(event_id);
    if (!raw) return std::nullopt;
    return make_view(parse_event(*raw), clock_(), cached_tip());
}

SubscribeResult LotteryService::subscribe(const std::string& event_id, const std::string& identity) {
    std::unique_lock<std::mutex> strict_lock;
    if (config_.strict_identities) {
        strict_lock = std::unique_lock(identities_mutex_);
        const auto it = identities_.find(event_id);
        if (it != identities_.end() && it->second.contains(identity)) {
            throw Error(ErrorCode::DuplicateMember, "identity already subscribed to event " + event_id);
        }
    }

    const Timestamp now = clock_();
    SubscribeResult result;
    const auto tx = ledger_.transact(event_id, [&](const std::string* current) -> std::optional<Write> {
        if (current == nullptr) {
            throw Error(ErrorCode::NotFound, "no event with id " + event_id);
        }
        Subscription sub = blocklot::subscribe(parse_event(*current), identity, now, *entropy_);
        result.token = sub.token;
        result.digest = sub.digest;
        std::string proposal = export_event(sub.event);
        return Write{std::move(proposal), [event = std::move(sub.event)](const std::string& tx_id) mutable {
                         event.subscribe_tx_ids.push_back(tx_id);
                         return export_event(event);
                     }};
    });
    result.event_id = event_id;
    result.tx_id = tx.value_or("");

    if (config_.strict_identities) {
        identities_[event_id].insert(identity);
    }
    return result;
}

std::uint64_t LotteryService::wait_for_confirmations(std::uint64_t required) {
    auto backoff = config_.lag_repoll_backoff;
    std::uint64_t tip = 0;
    for (int attempt = 0; attempt <= config_.lag_repoll_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        tip = beacon_->latest_height();
        {
            std::lock_guard lock(tip_mutex_);
            tip_ = tip;
            tip_fetched_ = std::chrono::steady_clock::now();
        }
        if (tip >= required) return tip;
    }
    throw Error(ErrorCode::TooEarly, "beacon tip " + std::to_string(tip) + " has not reached height " +
                                         std::to_string(required) + " (target plus " +
                                         std::to_string(config_.confirmation_depth) + " confirmations)");
}

DrawResult LotteryService::draw(const std::string& event_id, const AuthToken& organizer_token) {
    const LotteryEvent event = load(event_id);
    if (!organizer_token_matches(event, organizer_token)) {
        throw Error(ErrorCode::BadToken, "organizer token does not match event " + event_id);
    }
    if (event.status == EventStatus::Drawn) {
        return DrawResult{event, true};
    }
    if (clock_() < event.announcement_date) {
        throw Error(ErrorCode::TooEarly, "announcement date " + format_utc(event.announcement_date) +
                                             " has not arrived");
    }
    // target_height was fixed at open time and is never re-derived here.
    wait_for_confirmations(event.target_height + config_.confirmation_depth);
    BlockHeader header;
    try {
        header = beacon_->header(event.target_height);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BlockNotYetPublished) throw Error(ErrorCode::TooEarly, e.what());
        throw;
    }
    const Hash256 seed = compute_block_hash(header);

    DrawResult result;
    ledger_.transact(event_id, [&](const std::string* current) -> std::optional<Write> {
        if (current == nullptr) {
            throw Error(ErrorCode::NotFound, "no event with id " + event_id);
        }
        LotteryEvent latest = parse_event(*current);
        if (latest.status == EventStatus::Drawn) {
            result = DrawResult{std::move(latest), true};
            return std::nullopt;
        }
        LotteryEvent proposal = apply_draw(latest, organizer_token, seed, "");
        return Write{export_event(proposal), [&, latest](const std::string& tx_id) {
                         result = DrawResult{apply_draw(latest, organizer_token, seed, tx_id), false};
                         return export_event(result.event);
                     }};
    });
    return result;
}

bool LotteryService::check(const std::string& event_id, const std::string& identity, const AuthToken& token) {
    return check_winner(load(event_id), identity, token);
}

VerificationReport LotteryService::verify(const std::string& event_id) {
    auto raw = ledger_.try_get_state(event_id);
    if (!raw) {
        throw Error(ErrorCode::NotFound, "no event with id " + event_id);
    }
    const MajorityReader majority = [this](std::string_view key) { return ledger_.majority_read(key); };

    LotteryEvent local;
    bool local_unreadable = false;
    try {
        local = parse_event(*raw);
    } catch (const Error&) {
        // unreadable local copy: check the majority copy instead
        local = parse_event(ledger_.majority_read(event_id));
        local_unreadable = true;
    }
    if (local.status != EventStatus::Drawn && !local.random_seed) {
        throw Error(ErrorCode::NotDrawn, "event " + event_id + " has not been drawn");
    }
    const BlockHeader header = beacon_->header(local.target_height);
    VerificationReport report = verify_event(local, header, local.initial_random_key, majority);
    if (local_unreadable) {
        report.majority_ok = false;
        report.details.push_back({"majority", "local peer returned an unreadable record"});
    }
    return report;
}

std::string LotteryService::export_record(const std::string& event_id, const AuthToken& organizer_token) {
    const LotteryEvent event = load(event_id);
    if (!organizer_token_matches(event, organizer_token)) {
        throw Error(ErrorCode::BadToken, "organizer token does not match event " + event_id);
    }
    if (event.status != EventStatus::Drawn) {
        throw Error(ErrorCode::NotDrawn, "event " + event_id + " has not been drawn");
    }
    return export_event(event);
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::MalformedRecord:
    case ErrorCode::InsufficientRuns: return 400;
    case ErrorCode::BadToken: return 403;
    case ErrorCode::NotFound:
    case ErrorCode::KeyNotFound: return 404;
    case ErrorCode::AlreadyDrawn:
    case ErrorCode::DuplicateMember:
    case ErrorCode::NotDrawn:
    case ErrorCode::TooManyWinners:
    case ErrorCode::EmptyEvent: return 409;
    case ErrorCode::PastDeadline: return 410;
    case ErrorCode::TooEarly:
    case ErrorCode::BlockNotYetPublished: return 425;
    case ErrorCode::BeaconUnavailable:
    case ErrorCode::MalformedResponse: return 502;
    case ErrorCode::ReplicationFailure:
    case ErrorCode::NoMajority: return 503;
    }
    return 500;
}

} // namespace blocklot
