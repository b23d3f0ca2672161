#include "blocklot/errors.hpp"
#include "blocklot/serialize.hpp"
#include "blocklot/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <iostream>
#include <mutex>

namespace blocklot {

namespace {

using json = nlohmann::json;

json optional_hex(const std::optional<Hash256>& value) {
    return value ? json(to_hex(*value)) : json(nullptr);
}

json digests(const std::vector<ParticipantDigest>& list) {
    json out = json::array();
    for (const auto& d : list) out.push_back(d.hex());
    return out;
}

json to_json(const PublicEventView& view) {
    const LotteryEvent& e = view.event;
    return json{
        {"event_id", e.event_id},
        {"name", e.name},
        {"announcement_date", format_utc(e.announcement_date)},
        {"num_winners", e.num_winners},
        {"block_offset", e.block_offset},
        {"target_height", e.target_height},
        {"note", e.note},
        {"channel_id", e.channel_id},
        {"open_tx_id", e.open_tx_id},
        {"subscribe_tx_ids", e.subscribe_tx_ids},
        {"draw_tx_id", e.draw_tx_id ? json(*e.draw_tx_id) : json(nullptr)},
        {"member_list", digests(e.member_list)},
        {"winner_list", digests(e.winner_list)},
        {"verifiable_random_key", e.verifiable_random_key ? json(e.verifiable_random_key->hex()) : json(nullptr)},
        {"random_seed", optional_hex(e.random_seed)},
        {"status", to_string(e.status)},
        {"participant_count", view.participant_count},
        {"date_reached", view.date_reached},
        {"target_block_reached", view.target_block_reached},
        {"draw_available", view.draw_available},
    };
}

json to_json(const VerificationReport& report, const std::string& event_id) {
    json details = json::array();
    for (const auto& d : report.details) {
        details.push_back({{"check", d.check}, {"message", d.message}});
    }
    return json{
        {"event_id", event_id},
        {"seed_ok", report.seed_ok},
        {"event_integrity_ok", report.event_integrity_ok},
        {"winner_recomputation_ok", report.winner_recomputation_ok},
        {"majority_ok", report.majority_ok},
        {"majority_checked", report.majority_checked},
        {"passed", report.passed()},
        {"details", details},
    };
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, http_status(code), json{{"error", to_string(code)}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    try {
        json body = json::parse(req.body);
        if (!body.is_object()) throw Error(ErrorCode::InvalidParameter, "request body must be a JSON object");
        return body;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidParameter, std::string("request body is not valid JSON: ") + e.what());
    }
}

std::string required_string(const json& body, const char* field) {
    if (!body.contains(field) || !body[field].is_string()) {
        throw Error(ErrorCode::InvalidParameter, std::string("field '") + field + "' must be a string");
    }
    return body[field].get<std::string>();
}

template <typename T>
T required_count(const json& body, const char* field, T minimum) {
    if (!body.contains(field) || !body[field].is_number_integer()) {
        throw Error(ErrorCode::InvalidParameter, std::string("field '") + field + "' must be an integer");
    }
    const auto value = body[field].get<std::int64_t>();
    if (value < static_cast<std::int64_t>(minimum)) {
        throw Error(ErrorCode::InvalidParameter,
                    std::string("field '") + field + "' must be at least " + std::to_string(minimum));
    }
    return static_cast<T>(value);
}

AuthToken token_param(const std::string& hex) {
    if (hex.empty()) throw Error(ErrorCode::InvalidParameter, "token is required");
    return AuthToken::from_hex(hex);
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            send_json(res, 500, json{{"error", "Internal"}, {"message", e.what()}});
        }
    };
}

} // namespace

struct HttpServer::Impl {
    explicit Impl(LotteryService& s) : service(s) {}

    LotteryService& service;
    httplib::Server server;
    std::mutex log_mutex;
};

HttpServer::HttpServer(LotteryService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& server = impl_->server;
    LotteryService& svc = service;

    // One JSON line per request. Query strings are left out: check carries tokens there.
    server.new_task_queue = [n = svc.config().worker_threads] { return new httplib::ThreadPool(n); };

    if (svc.config().access_log) server.set_logger([impl = impl_.get()](const httplib::Request& req, const httplib::Response& res) {
        const json entry{{"ts", format_utc(utc_now())},
                         {"method", req.method},
                         {"path", req.path},
                         {"status", res.status},
                         {"remote", req.remote_addr}};
        std::lock_guard lock(impl->log_mutex);
        std::clog << entry.dump() << std::endl;
    });

    server.Post("/events", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        OpenRequest request;
        request.name = required_string(body, "name");
        request.announcement_date = parse_utc(required_string(body, "announcement_date"));
        request.num_winners = required_count<std::uint32_t>(body, "num_winners", 1);
        request.block_offset = body.contains("block_offset") ? required_count<std::uint64_t>(body, "block_offset", 0) : 0;
        if (body.contains("note")) request.note = required_string(body, "note");
        const OpenResult opened = svc.open(request);
        send_json(res, 201, json{{"event_id", opened.event_id},
                                 {"organizer_token", opened.organizer_token.hex()},
                                 {"initial_random_key", to_hex(opened.initial_random_key)},
                                 {"target_height", opened.target_height},
                                 {"open_tx_id", opened.open_tx_id}});
    }));

    server.Get("/events", guarded([&svc](const httplib::Request&, httplib::Response& res) {
        json events = json::array();
        for (const auto& view : svc.query()) events.push_back(to_json(view));
        send_json(res, 200, events);
    }));

    server.Get(R"(/events/([0-9A-Za-z_-]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto view = svc.find(id);
        if (!view) throw Error(ErrorCode::NotFound, "no event with id " + id);
        send_json(res, 200, to_json(*view));
    }));

    server.Post(R"(/events/([0-9A-Za-z_-]+)/subscribe)",
                guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                    const json body = parse_body(req);
                    const auto sub = svc.subscribe(req.matches[1], required_string(body, "identity"));
                    send_json(res, 200, json{{"event_id", sub.event_id},
                                             {"token", sub.token.hex()},
                                             {"digest", sub.digest.hex()},
                                             {"tx_id", sub.tx_id}});
                }));

    server.Post(R"(/events/([0-9A-Za-z_-]+)/draw)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const auto drawn = svc.draw(req.matches[1], token_param(required_string(body, "token")));
        const LotteryEvent& e = drawn.event;
        send_json(res, 200, json{{"event_id", e.event_id},
                                 {"status", to_string(e.status)},
                                 {"winner_list", digests(e.winner_list)},
                                 {"verifiable_random_key", e.verifiable_random_key->hex()},
                                 {"random_seed", optional_hex(e.random_seed)},
                                 {"draw_tx_id", e.draw_tx_id.value_or("")},
                                 {"target_height", e.target_height},
                                 {"already_drawn", drawn.already_drawn}});
    }));

    server.Get(R"(/events/([0-9A-Za-z_-]+)/check)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string identity = req.get_param_value("identity");
        if (identity.empty()) throw Error(ErrorCode::InvalidParameter, "identity is required");
        const bool winner = svc.check(req.matches[1], identity, token_param(req.get_param_value("token")));
        send_json(res, 200, json{{"event_id", std::string(req.matches[1])}, {"winner", winner}});
    }));

    server.Get(R"(/events/([0-9A-Za-z_-]+)/verify)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        send_json(res, 200, to_json(svc.verify(id), id));
    }));

    server.Get(R"(/events/([0-9A-Za-z_-]+)/export)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string record = svc.export_record(req.matches[1], token_param(req.get_param_value("token")));
        res.status = 200;
        res.set_content(record, "text/plain; charset=utf-8");
    }));

    if (svc.config().ui_dir) {
        server.set_mount_point("/ui", svc.config().ui_dir->string());
    }
}

HttpServer::~HttpServer() {
    stop();
}

int HttpServer::bind(const std::string& address, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(address);
        if (bound <= 0) throw Error(ErrorCode::InvalidParameter, "cannot bind " + address);
        return bound;
    }
    if (!impl_->server.bind_to_port(address, port)) {
        throw Error(ErrorCode::InvalidParameter, "cannot bind " + address + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::serve() {
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

bool HttpServer::running() const {
    return impl_->server.is_running();
}

} // namespace blocklot
