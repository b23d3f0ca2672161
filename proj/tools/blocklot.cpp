// blocklot: command-line client for a blocklotd service, plus offline checks.
//
// Exit status: 0 success, 1 a check came out negative (not a winner,
// verification or audit failed), 2 bad usage or a 4xx answer, 3 transport
// failure or a 5xx answer.

#include "blocklot/beacon.hpp"
#include "blocklot/errors.hpp"
#include "blocklot/serialize.hpp"
#include "blocklot/verification.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using json = nlohmann::json;
using namespace blocklot;

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;
constexpr int kTransport = 3;

constexpr std::string_view kGenesisHash = "000000000019d6689c085ae165831e934ff763ae46a2a6c172b3f1b60a8ce26f";

struct Exit {
    int code;
    std::string message;
};

struct Options {
    std::string url = "http://127.0.0.1:8080";
    bool json_output = false;
};

class Api {
public:
    explicit Api(const std::string& url) : client_(url) {
        client_.set_connection_timeout(std::chrono::seconds(5));
        client_.set_read_timeout(std::chrono::seconds(60));
    }

    json get(const std::string& path) { return finish(client_.Get(path), path); }

    std::string get_text(const std::string& path) {
        auto res = client_.Get(path);
        check(res, path);
        return res->body;
    }

    json post(const std::string& path, const json& body) {
        return finish(client_.Post(path, body.dump(), "application/json"), path);
    }

private:
    void check(const httplib::Result& res, const std::string& path) {
        if (!res) throw Exit{kTransport, path + ": " + httplib::to_string(res.error())};
        if (res->status < 400) return;
        std::string message = res->body;
        try {
            const json body = json::parse(res->body);
            message = body.value("error", "") + ": " + body.value("message", "");
        } catch (const json::exception&) {
        }
        throw Exit{res->status >= 500 ? kTransport : kUsage, "HTTP " + std::to_string(res->status) + " " + message};
    }

    json finish(const httplib::Result& res, const std::string& path) {
        check(res, path);
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw Exit{kTransport, path + ": response is not JSON: " + e.what()};
        }
    }

    httplib::Client client_;
};

std::string encode(const std::string& text) {
    return httplib::detail::encode_query_param(text);
}

void print_fields(const json& body, const Options& opt) {
    if (opt.json_output) {
        std::cout << body.dump(2) << '\n';
        return;
    }
    for (const auto& [key, value] : body.items()) {
        std::cout << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
}

void print_report(const json& report, const Options& opt) {
    if (opt.json_output) {
        std::cout << report.dump(2) << '\n';
        return;
    }
    for (const char* flag : {"seed_ok", "event_integrity_ok", "winner_recomputation_ok", "majority_ok"}) {
        std::cout << flag << ": " << (report.value(flag, false) ? "true" : "false") << '\n';
    }
    if (report.contains("majority_checked") && !report["majority_checked"].get<bool>()) {
        std::cout << "majority_checked: false (offline)\n";
    }
    for (const auto& d : report.value("details", json::array())) {
        std::cout << "  " << d.value("check", "") << ": " << d.value("message", "") << '\n';
    }
    std::cout << (report.value("passed", false) ? "PASSED" : "FAILED") << '\n';
}

json report_json(const VerificationReport& r) {
    json details = json::array();
    for (const auto& d : r.details) details.push_back({{"check", d.check}, {"message", d.message}});
    return {{"seed_ok", r.seed_ok},
            {"event_integrity_ok", r.event_integrity_ok},
            {"winner_recomputation_ok", r.winner_recomputation_ok},
            {"majority_ok", r.majority_ok},
            {"majority_checked", r.majority_checked},
            {"passed", r.passed()},
            {"details", details}};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Exit{kUsage, "cannot read " + path};
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Exit{kTransport, "cannot write " + path};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blocklot: verifiable lottery client"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--url", opt.url, "Service base URL")->envname("BLOCKLOT_URL");
    app.add_flag("--json", opt.json_output, "Print raw JSON");

    std::string name, date, note, event_id, identity, token, out_path, seed_hex, header_path, event_path;
    std::uint32_t winners = 1;
    std::uint64_t offset = 0;
    std::size_t runs = 10'000, participants = 0;
    double zmax = kDefaultZMax;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    auto* open = app.add_subcommand("open", "Open a lottery event");
    open->add_option("--name", name, "Event name")->required();
    open->add_option("--date", date, "Announcement date, ISO-8601 UTC")->required();
    open->add_option("--winners", winners, "Number of winners")->check(CLI::PositiveNumber);
    open->add_option("--offset", offset, "Block offset above the current tip");
    open->add_option("--note", note, "Free-text note");

    auto* query = app.add_subcommand("query", "List events, or show one");
    query->add_option("--event", event_id, "Event id");

    auto* subscribe = app.add_subcommand("subscribe", "Join an event");
    subscribe->add_option("--event", event_id)->required();
    subscribe->add_option("--identity", identity, "Your identity string (kept off the ledger)")->required();

    auto* draw = app.add_subcommand("draw", "Draw winners (organizer)");
    draw->add_option("--event", event_id)->required();
    draw->add_option("--token", token, "Organizer token")->required();

    auto* check = app.add_subcommand("check", "Check whether you won; exit 1 if not");
    check->add_option("--event", event_id)->required();
    check->add_option("--identity", identity)->required();
    check->add_option("--token", token, "Participant token")->required();

    auto* verify = app.add_subcommand("verify", "Server-side verification report; exit 1 on failure");
    verify->add_option("--event", event_id)->required();

    auto* exp = app.add_subcommand("export", "Download the full event record (organizer)");
    exp->add_option("--event", event_id)->required();
    exp->add_option("--token", token, "Organizer token")->required();
    exp->add_option("-o,--output", out_path, "Output file (default stdout)");

    auto* offline = app.add_subcommand("verify-offline", "Verify an exported record against a header file");
    offline->add_option("--event", event_path, "Exported record")->required()->check(CLI::ExistingFile);
    offline->add_option("--header", header_path, "Header file in fixture CSV format")
        ->required()
        ->check(CLI::ExistingFile);

    auto* audit = app.add_subcommand("audit", "Fairness audit by repeated simulated draws; exit 1 on failure");
    audit->add_option("--event", event_id, "Audit the member list of this event");
    audit->add_option("--participants", participants, "Audit a synthetic event of this size");
    audit->add_option("--winners", winners, "Winners for a synthetic event")->check(CLI::PositiveNumber);
    audit->add_option("--runs", runs, "Number of simulated draws");
    audit->add_option("--zmax", zmax, "Two-sided |z| bound");
    audit->add_option("--seed", seed_hex, "Audit seed, 32-byte hex (default: genesis block hash)");
    audit->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    audit->add_option("-o,--output", out_path, "Report file (default stdout)");
    audit->get_option("--event")->excludes("--participants");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*offline) {
            const LotteryEvent event = parse_event(read_file(event_path));
            const Fixture headers = Fixture::load(header_path);
            const auto it = headers.records.find(event.target_height);
            if (it == headers.records.end()) {
                throw Exit{kUsage, "header file has no block at height " + std::to_string(event.target_height)};
            }
            if (compute_block_hash(it->second.header) != it->second.expected_hash) {
                std::cerr << "warning: header hash differs from the hash recorded next to it\n";
            }
            const auto report = verify_event(event, it->second.header, event.initial_random_key);
            print_report(report_json(report), opt);
            return report.passed() ? kOk : kNegative;
        }

        if (*audit) {
            std::vector<ParticipantDigest> members;
            std::size_t w = winners;
            if (!event_id.empty()) {
                const json view = Api(opt.url).get("/events/" + event_id);
                for (const auto& d : view["member_list"]) members.push_back(ParticipantDigest::from_hex(d.get<std::string>()));
                w = view["num_winners"].get<std::size_t>();
            } else if (participants > 0) {
                for (std::size_t i = 0; i < participants; ++i) {
                    members.push_back(ParticipantDigest::of("participant-" + std::to_string(i), AuthToken{}));
                }
            } else {
                throw Exit{kUsage, "audit needs --event or --participants"};
            }
            const Hash256 seed = fixed_from_hex<32>(seed_hex.empty() ? kGenesisHash : seed_hex);
            const auto report = run_fairness_trial(members, w, seed_schedule(seed, runs), zmax, {}, workers);
            write_output(format_fairness_report(report), out_path);
            if (!out_path.empty() && out_path != "-") {
                std::cerr << (report.passed ? "audit passed" : "audit FAILED") << ", max |z| = " << report.max_abs_z()
                          << '\n';
            }
            return report.passed ? kOk : kNegative;
        }

        Api api(opt.url);
        if (*open) {
            json body{{"name", name}, {"announcement_date", date}, {"num_winners", winners}, {"block_offset", offset}};
            if (!note.empty()) body["note"] = note;
            print_fields(api.post("/events", body), opt);
        } else if (*query) {
            if (!event_id.empty()) {
                print_fields(api.get("/events/" + event_id), opt);
            } else {
                const json events = api.get("/events");
                if (opt.json_output) {
                    std::cout << events.dump(2) << '\n';
                } else {
                    for (const auto& e : events) {
                        std::cout << e["event_id"].get<std::string>() << "  " << e["status"].get<std::string>() << "  "
                                  << e["announcement_date"].get<std::string>() << "  participants="
                                  << e["participant_count"] << "  winners=" << e["num_winners"] << "  "
                                  << e["name"].get<std::string>() << '\n';
                    }
                }
            }
        } else if (*subscribe) {
            print_fields(api.post("/events/" + event_id + "/subscribe", {{"identity", identity}}), opt);
        } else if (*draw) {
            print_fields(api.post("/events/" + event_id + "/draw", {{"token", token}}), opt);
        } else if (*check) {
            const json body =
                api.get("/events/" + event_id + "/check?identity=" + encode(identity) + "&token=" + encode(token));
            const bool won = body.value("winner", false);
            if (opt.json_output) {
                std::cout << body.dump(2) << '\n';
            } else {
                std::cout << (won ? "winner" : "not a winner") << '\n';
            }
            return won ? kOk : kNegative;
        } else if (*verify) {
            const json report = api.get("/events/" + event_id + "/verify");
            print_report(report, opt);
            return report.value("passed", false) ? kOk : kNegative;
        } else if (*exp) {
            write_output(api.get_text("/events/" + event_id + "/export?token=" + encode(token)), out_path);
        }
        return kOk;
    } catch (const Exit& e) {
        std::cerr << "blocklot: " << e.message << '\n';
        return e.code;
    } catch (const Error& e) {
        std::cerr << "blocklot: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kUsage;
    }
}
