// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "blocklot/errors.hpp"
#include "blocklot/ledger.hpp"
#include "blocklot/serialize.hpp"
#include "blocklot/service.hpp"
#include "blocklot/verification.hpp"

#include "reference.hpp"
#include "support.hpp"

#include <httplib.h>
#include <json.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace blocklot;
using namespace blocklot::testing;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Failed {
    std::string why;
};

void require(bool condition, const std::string& why) {
    if (!condition) throw Failed{why};
}

int failures = 0;

void run(const char* name, Outcome (*criterion)()) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = criterion();
    } catch (const Failed& f) {
        out = {false, f.why};
    } catch (const std::exception& e) {
        out = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!out.ok) ++failures;
    std::printf("[%s] %-34s %9.1f ms  %s\n", out.ok ? "PASS" : "FAIL", name, ms, out.detail.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

oracle::Digest to_oracle(const Hash256& h) {
    oracle::Digest d{};
    std::copy(h.begin(), h.end(), d.begin());
    return d;
}

const Fixture& corpus() {
    static const Fixture fx = Fixture::load(fixture("mainnet_headers.csv"));
    return fx;
}

Outcome draw_determinism() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    for (int c = 0; c < 1000; ++c) {
        const std::size_t p = 1 + rng() % 200;
        const std::size_t w = 1 + rng() % p;
        const auto members = random_members(rng, p);
        const Hash256 seed = random_hash(rng);
        const auto perm = shuffle_members(members, seed);
        const auto first = fisher_yates_draw(members, w, seed);
        const auto second = fisher_yates_draw(members, w, seed);
        require(first == second, "case " + std::to_string(c) + ": two runs disagree");
        require(std::is_permutation(perm.begin(), perm.end(), members.begin(), members.end()),
                "case " + std::to_string(c) + ": shuffle is not a permutation");
        require(first.size() == w && std::equal(first.begin(), first.end(), perm.begin()),
                "case " + std::to_string(c) + ": winners are not the permutation prefix");
        require(std::set<ParticipantDigest>(first.begin(), first.end()).size() == w,
                "case " + std::to_string(c) + ": repeated winner");
    }
    const double elapsed = seconds_since(start);
    require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
    return {true, "1000 cases, " + std::to_string(elapsed).substr(0, 5) + " s"};
}

Outcome oracle_equivalence() {
    std::size_t compared = 0;
    const auto seeds = seed_schedule(sha256(std::string_view("oracle equivalence")), 100);
    for (std::size_t p = 1; p <= 6; ++p) {
        std::vector<ParticipantDigest> members;
        for (std::size_t i = 0; i < p; ++i) members.push_back(ParticipantDigest::of("m" + std::to_string(i), AuthToken{}));
        for (std::size_t w = 1; w <= p; ++w) {
            for (const auto& seed : seeds) {
                std::vector<ParticipantDigest> expected;
                for (auto idx : oracle::simulate_draw(p, w, to_oracle(seed))) expected.push_back(members[idx]);
                require(fisher_yates_draw(members, w, seed) == expected,
                        "P=" + std::to_string(p) + " W=" + std::to_string(w) + " seed " + to_hex(seed));
                ++compared;
            }
        }
    }
    return {true, std::to_string(compared) + " winner lists identical"};
}

Outcome block_hash_fixture() {
    const Fixture& fx = corpus();
    require(fx.records.size() >= 10, "fixture has only " + std::to_string(fx.records.size()) + " headers");
    require(fx.records.contains(0), "genesis missing from fixture");
    for (const auto& [height, record] : fx.records) {
        const Hash256 got = compute_block_hash(record.header);
        require(got == record.expected_hash,
                "height " + std::to_string(height) + ": " + to_hex(got) + " != " + to_hex(record.expected_hash));
    }
    return {true, std::to_string(fx.records.size()) + " mainnet headers byte-exact (genesis..125552)"};
}

Outcome verifiable_key_round_trip() {
    std::mt19937_64 rng(500);
    const auto mutations = single_field_mutations();
    std::size_t mutants = 0;
    for (int i = 0; i < 500; ++i) {
        auto it = corpus().records.begin();
        std::advance(it, rng() % corpus().records.size());
        const auto& rec = it->second;
        const LotteryEvent event = random_drawn_event(rng, rec.expected_hash, rec.header.height).event;
        require(derive_verifiable_key(event) == *event.verifiable_random_key,
                "event " + std::to_string(i) + ": recomputed key differs");
        const std::string honest = export_event(event);
        const MajorityReader majority = [&](std::string_view) { return honest; };
        require(verify_event(event, rec.header, event.initial_random_key, majority).passed(),
                "event " + std::to_string(i) + ": clean event fails verification");
        for (const auto& [field, mutate] : mutations) {
            LotteryEvent local = event;
            mutate(local);
            const auto report = verify_event(local, rec.header, local.initial_random_key, majority);
            require(!report.seed_ok || !report.event_integrity_ok || !report.winner_recomputation_ok ||
                        !report.majority_ok,
                    "event " + std::to_string(i) + ": mutation of " + field + " went unnoticed");
            ++mutants;
        }
    }
    return {true, "500 events, " + std::to_string(mutations.size()) + " fields, " + std::to_string(mutants) +
                      " mutants all flagged"};
}

Outcome majority_verification() {
    const std::size_t n = 3;
    const auto lie = [](std::string_view, std::string_view honest) { return std::string(honest) + "#forged"; };

    // f = 1: N >= 2f + 1 holds, every key reads honest whichever peer lies.
    require(n >= 2 * 1 + 1, "bound for f=1");
    for (std::size_t bad = 0; bad < n; ++bad) {
        Ledger ledger({n}, std::make_shared<DeterministicEntropy>("maj1"));
        for (int k = 0; k < 50; ++k) ledger.put_state("key" + std::to_string(k), "value" + std::to_string(k));
        ledger.corrupt(bad, lie);
        for (int k = 0; k < 50; ++k) {
            require(ledger.majority_read("key" + std::to_string(k)) == "value" + std::to_string(k),
                    "f=1: peer " + std::to_string(bad) + " corrupted key" + std::to_string(k));
        }
    }

    // f = 2: the bound fails; the read yields the forged value or NoMajority.
    require(!(n >= 2 * 2 + 1), "bound for f=2");
    std::size_t forged = 0, split = 0;
    for (std::size_t good = 0; good < n; ++good) {
        for (bool collude : {true, false}) {
            Ledger ledger({n}, std::make_shared<DeterministicEntropy>("maj2"));
            ledger.put_state("key", "honest");
            std::size_t tag = 0;
            for (std::size_t p = 0; p < n; ++p) {
                if (p == good) continue;
                if (collude) {
                    ledger.corrupt(p, lie);
                } else {
                    ledger.corrupt(p, [t = tag++](std::string_view, std::string_view) { return "liar" + std::to_string(t); });
                }
            }
            try {
                const std::string got = ledger.majority_read("key");
                require(got != "honest", "f=2 returned the honest value against two faults");
                ++forged;
            } catch (const Error& e) {
                require(e.code() == ErrorCode::NoMajority, "f=2 unexpected error " + std::string(e.what()));
                ++split;
            }
        }
    }
    return {true, "f=1 honest on all keys; f=2 forged " + std::to_string(forged) + "x, NoMajority " +
                      std::to_string(split) + "x (N >= 2f+1 violated)"};
}

Outcome fairness_audit() {
    const auto start = std::chrono::steady_clock::now();
    std::vector<ParticipantDigest> members;
    for (int i = 0; i < 10; ++i) members.push_back(ParticipantDigest::of("p" + std::to_string(i), AuthToken{}));
    const Hash256 corpus_seed = corpus().records.at(0).expected_hash;
    const auto seeds = seed_schedule(corpus_seed, 10'000);
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    const auto honest = run_fairness_trial(members, 1, seeds, 4.0, {}, workers);
    require(honest.passed, "honest draw fails at z_max=4 (max|z|=" + std::to_string(honest.max_abs_z()) + ")");

    const DrawFunction rigged = [](std::span<const ParticipantDigest> m, std::size_t, const Hash256&) {
        return std::vector<ParticipantDigest>{m.front()};
    };
    const auto rigged_report = run_fairness_trial(members, 1, seed_schedule(corpus_seed, 100), 4.0, rigged);
    require(!rigged_report.passed, "rigged double passes");
    const double z0 = rigged_report.per_participant[0].z_score;
    const double closed_form = (100.0 - 100.0 * 0.1) / std::sqrt(100.0 * 0.1 * 0.9);
    require(std::abs(z0 - 30.0) <= 1e-9 && std::abs(closed_form - 30.0) <= 1e-9,
            "rigged z=" + std::to_string(z0));

    const double chi = chi_square_statistic(honest);
    const double critical =
        boost::math::quantile(boost::math::complement(boost::math::chi_squared(members.size() - 1), 0.001));
    require(chi < critical, "chi-square " + std::to_string(chi) + " >= " + std::to_string(critical));

    const double elapsed = seconds_since(start);
    require(elapsed < 30.0, "took " + std::to_string(elapsed) + " s");
    char buf[200];
    std::snprintf(buf, sizeof(buf), "honest max|z|=%.3f, rigged z=%.9f, chi2=%.3f < %.3f, %.2f s",
                  honest.max_abs_z(), z0, chi, critical, elapsed);
    return {true, buf};
}

Outcome golden_flow() {
    using json = nlohmann::json;
    auto chain = std::make_shared<ScriptedChain>("genesis_chain.csv", 0);
    auto clock = std::make_shared<ManualClock>(parse_utc("2024-03-01T09:00:00Z"));
    ServiceConfig config;
    config.lag_repoll_attempts = 0;
    config.access_log = false;
    LotteryService service(config, chain, std::make_shared<DeterministicEntropy>("golden"),
                           [clock] { return (*clock)(); });
    HttpServer server(service);
    const int port = server.bind("127.0.0.1", 0);
    std::thread serving([&] { server.serve(); });
    struct Stop {
        HttpServer& s;
        std::thread& t;
        ~Stop() {
            s.stop();
            t.join();
        }
    } stop{server, serving};
    while (!server.running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    httplib::Client client("127.0.0.1", port);

    const auto call = [&](const std::string& method, const std::string& path, const json& body = {}) {
        auto res = method == "POST" ? client.Post(path, body.dump(), "application/json") : client.Get(path);
        require(static_cast<bool>(res), method + " " + path + ": no response");
        require(res->status / 100 == 2, method + " " + path + ": HTTP " + std::to_string(res->status) + " " + res->body);
        return json::parse(res->body);
    };

    const json opened = call("POST", "/events",
                             {{"name", "golden"}, {"announcement_date", "2024-03-02T09:00:00Z"},
                              {"num_winners", 1}, {"block_offset", 0}});
    const std::string id = opened["event_id"];
    const std::vector<std::string> names = {"alice", "bob", "carol"};
    std::vector<std::string> tokens;
    for (const auto& name : names) tokens.push_back(call("POST", "/events/" + id + "/subscribe", {{"identity", name}})["token"]);

    clock->set(parse_utc("2024-03-02T09:00:00Z"));
    chain->set_tip(7);
    const json drawn = call("POST", "/events/" + id + "/draw", {{"token", opened["organizer_token"]}});

    const Hash256 genesis = corpus().records.at(0).expected_hash;
    require(drawn["random_seed"] == to_hex(genesis), "seed is not the genesis hash");
    const auto expected_index = oracle::simulate_draw(3, 1, to_oracle(genesis));
    require(expected_index == std::vector<std::size_t>{0}, "oracle no longer picks the first subscriber");
    const std::string expected_winner = ParticipantDigest::of(names[0], AuthToken::from_hex(tokens[0])).hex();
    require(drawn["winner_list"] == json::array({expected_winner}), "winner differs from the oracle");

    for (std::size_t i = 0; i < names.size(); ++i) {
        const json check = call("GET", "/events/" + id + "/check?identity=" + names[i] + "&token=" + tokens[i]);
        require(check["winner"].get<bool>() == (i == 0), "check disagrees for " + names[i]);
    }
    const json report = call("GET", "/events/" + id + "/verify");
    for (const char* flag : {"seed_ok", "event_integrity_ok", "winner_recomputation_ok", "majority_ok"}) {
        require(report[flag].get<bool>(), std::string(flag) + " is false");
    }
    return {true, "winner=alice (oracle index 0), report all true, fixture beacon"};
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    run("draw determinism & correctness", draw_determinism);
    run("brute-force oracle equivalence", oracle_equivalence);
    run("block-hash fixture suite", block_hash_fixture);
    run("verifiable-key round trip", verifiable_key_round_trip);
    run("majority verification", majority_verification);
    run("fairness audit", fairness_audit);
    run("end-to-end golden flow", golden_flow);
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
