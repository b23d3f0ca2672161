#include "blocklot/verification.hpp"

#include "blocklot/errors.hpp"
#include "blocklot/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <thread>

namespace blocklot {

namespace {

void fail(VerificationReport& report, bool& flag, std::string check, std::string message) {
    flag = false;
    report.details.push_back({std::move(check), std::move(message)});
}

} // namespace

VerificationReport verify_event(const LotteryEvent& event, const BlockHeader& header,
                                const Hash256& initial_random_key, const MajorityReader& majority) {
    if (!event.random_seed) {
        throw Error(ErrorCode::NotDrawn, "event " + event.event_id + " has not been drawn");
    }
    const Hash256& seed = *event.random_seed;
    VerificationReport report;
    report.seed_ok = true;
    report.event_integrity_ok = true;
    report.winner_recomputation_ok = true;
    report.majority_ok = true;

    // (a) the seed is the hash of the target block
    if (header.height != event.target_height) {
        fail(report, report.seed_ok, "seed",
             "header is for height " + std::to_string(header.height) + " but the target is " +
                 std::to_string(event.target_height));
    } else if (!verify_seed(header, seed)) {
        fail(report, report.seed_ok, "seed",
             "block hash " + to_hex(compute_block_hash(header)) + " differs from recorded seed " + to_hex(seed));
    }

    // (b) winners re-derived from members, W and seed
    try {
        const auto expected = fisher_yates_draw(event.member_list, event.num_winners, seed);
        if (expected != event.winner_list) {
            fail(report, report.winner_recomputation_ok, "winners",
                 "recomputed winner list differs from the recorded one");
        }
    } catch (const Error& e) {
        fail(report, report.winner_recomputation_ok, "winners", e.what());
    }

    // (b) verifiable key recomputed over every recorded field
    if (!event.verifiable_random_key) {
        fail(report, report.event_integrity_ok, "integrity", "event carries no verifiable random key");
    } else {
        const VerifiableRandomKey recomputed = derive_verifiable_key(event, initial_random_key);
        const VerifiableRandomKey& stored = *event.verifiable_random_key;
        if (recomputed.hmac_part != stored.hmac_part) {
            fail(report, report.event_integrity_ok, "integrity",
                 "HMAC part does not match the initial random key and seed");
        }
        if (recomputed.info_part != stored.info_part) {
            fail(report, report.event_integrity_ok, "integrity",
                 "event information hash does not match the recorded fields");
        }
    }

    // (c) the local copy agrees with what a majority of peers hold
    if (majority) {
        report.majority_checked = true;
        try {
            if (majority(event.event_id) != export_event(event)) {
                fail(report, report.majority_ok, "majority",
                     "local copy differs from the value held by a majority of peers");
            }
        } catch (const Error& e) {
            fail(report, report.majority_ok, "majority", e.what());
        }
    }
    return report;
}

double z_score(std::uint64_t wins, std::uint64_t runs, double win_probability) {
    const double n = static_cast<double>(runs);
    const double p = win_probability;
    return (static_cast<double>(wins) - n * p) / std::sqrt(n * p * (1.0 - p));
}

double FairnessReport::max_abs_z() const noexcept {
    double out = 0.0;
    for (const auto& t : per_participant) out = std::max(out, std::abs(t.z_score));
    return out;
}

std::vector<Hash256> seed_schedule(const Hash256& audit_seed, std::size_t runs) {
    std::vector<Hash256> out;
    out.reserve(runs);
    Hash256 current = audit_seed;
    for (std::size_t i = 0; i < runs; ++i) {
        current = sha256(current);
        out.push_back(current);
    }
    return out;
}

FairnessReport run_fairness_trial(std::span<const ParticipantDigest> members,
                                  std::size_t num_winners, std::span<const Hash256> seeds,
                                  double z_max, const DrawFunction& draw, unsigned workers) {
    if (seeds.size() < kMinimumRuns) {
        throw Error(ErrorCode::InsufficientRuns, "fairness trial needs at least " + std::to_string(kMinimumRuns) +
                                                     " runs, got " + std::to_string(seeds.size()));
    }
    if (members.empty()) {
        throw Error(ErrorCode::EmptyEvent, "fairness trial needs participants");
    }
    if (num_winners < 1 || num_winners > members.size()) {
        throw Error(ErrorCode::TooManyWinners, "num_winners must be between 1 and the participant count");
    }
    if (!(z_max > 0.0)) {
        throw Error(ErrorCode::InvalidParameter, "z_max must be positive");
    }

    std::map<ParticipantDigest, std::size_t> index;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!index.emplace(members[i], i).second) {
            throw Error(ErrorCode::DuplicateMember, "participant list contains a duplicate digest");
        }
    }
    const DrawFunction& run = draw ? draw : DrawFunction(fisher_yates_draw);

    const auto tally_range = [&](std::size_t begin, std::size_t end, std::vector<std::uint64_t>& counts) {
        for (std::size_t k = begin; k < end; ++k) {
            for (const auto& winner : run(members, num_winners, seeds[k])) {
                const auto it = index.find(winner);
                if (it == index.end()) {
                    throw Error(ErrorCode::InvalidParameter, "draw returned a non-member " + winner.hex());
                }
                ++counts[it->second];
            }
        }
    };

    std::vector<std::uint64_t> wins(members.size(), 0);
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(seeds.size())));
    if (threads == 1) {
        tally_range(0, seeds.size(), wins);
    } else {
        std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(members.size(), 0));
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        const std::size_t chunk = (seeds.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(seeds.size(), t * chunk);
            const std::size_t end = std::min(seeds.size(), begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    tally_range(begin, end, partial[t]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        for (const auto& part : partial) {
            for (std::size_t i = 0; i < wins.size(); ++i) wins[i] += part[i];
        }
    }

    FairnessReport report;
    report.runs = seeds.size();
    report.participants = members.size();
    report.num_winners = num_winners;
    report.win_probability = static_cast<double>(num_winners) / static_cast<double>(members.size());
    report.z_max = z_max;
    report.degenerate = num_winners == members.size();
    report.passed = true;
    for (std::size_t i = 0; i < members.size(); ++i) {
        ParticipantTally tally{members[i], wins[i], 0.0};
        if (!report.degenerate) {
            tally.z_score = z_score(wins[i], report.runs, report.win_probability);
            if (!(std::abs(tally.z_score) < z_max)) report.passed = false;
        }
        report.per_participant.push_back(tally);
    }
    return report;
}

double chi_square_statistic(const FairnessReport& report) {
    const double expected = static_cast<double>(report.runs) * report.win_probability;
    if (expected <= 0.0) return 0.0;
    double chi = 0.0;
    for (const auto& t : report.per_participant) {
        const double diff = static_cast<double>(t.wins) - expected;
        chi += diff * diff / expected;
    }
    return chi;
}

std::string format_fairness_report(const FairnessReport& report) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "# runs=%llu\n# participants=%zu\n# num_winners=%zu\n# win_probability=%.12g\n"
                  "# z_max=%.12g\n# degenerate=%s\n# passed=%s\n",
                  static_cast<unsigned long long>(report.runs), report.participants, report.num_winners,
                  report.win_probability, report.z_max, report.degenerate ? "true" : "false",
                  report.passed ? "true" : "false");
    out += buf;
    out += "digest\twins\tz_score\n";
    for (const auto& t : report.per_participant) {
        std::snprintf(buf, sizeof(buf), "\t%llu\t%.9f\n", static_cast<unsigned long long>(t.wins), t.z_score);
        out += t.digest.hex();
        out += buf;
    }
    return out;
}

} // namespace blocklot
