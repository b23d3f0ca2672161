#pragma once

#include "blocklot/beacon.hpp"
#include "blocklot/lottery.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blocklot {

struct CheckFailure {
    std::string check;
    std::string message;
};

struct VerificationReport {
    bool seed_ok = false;
    bool event_integrity_ok = false;
    bool winner_recomputation_ok = false;
    bool majority_ok = false;
    // False when no peer set was available (offline verification); majority_ok
    // is then reported true and nothing is added to details.
    bool majority_checked = false;
    std::vector<CheckFailure> details;

    bool passed() const noexcept {
        return seed_ok && event_integrity_ok && winner_recomputation_ok && majority_ok;
    }
};

// Returns the majority value stored under a key (Ledger::majority_read).
using MajorityReader = std::function<std::string(std::string_view key)>;

// Re-runs every post-draw check against `event`, which is the caller's local
// copy. Throws NotDrawn when the event carries no random seed.
VerificationReport verify_event(const LotteryEvent& event, const BlockHeader& header,
                                const Hash256& initial_random_key,
                                const MajorityReader& majority = {});

inline constexpr double kDefaultZMax = 4.0;
inline constexpr std::size_t kMinimumRuns = 30;

struct ParticipantTally {
    ParticipantDigest digest;
    std::uint64_t wins = 0;
    double z_score = 0.0;
};

struct FairnessReport {
    std::uint64_t runs = 0;
    std::size_t participants = 0;
    std::size_t num_winners = 0;
    double win_probability = 0.0;
    std::vector<ParticipantTally> per_participant;
    double z_max = kDefaultZMax;
    // p in {0, 1}: z is undefined, reported as 0 and the trial passes.
    bool degenerate = false;
    bool passed = false;

    double max_abs_z() const noexcept;
};

using DrawFunction = std::function<std::vector<ParticipantDigest>(
    std::span<const ParticipantDigest> members, std::size_t num_winners, const Hash256& seed)>;

// (X - n p) / sqrt(n p (1 - p)).
double z_score(std::uint64_t wins, std::uint64_t runs, double win_probability);

// audit_seed -> SHA-256 chain; element k is SHA-256^(k+1)(audit_seed).
std::vector<Hash256> seed_schedule(const Hash256& audit_seed, std::size_t runs);

// One draw per seed, tallied per participant; passes when every |z| < z_max
// (two-sided). Throws InsufficientRuns below kMinimumRuns seeds.
FairnessReport run_fairness_trial(std::span<const ParticipantDigest> members,
                                  std::size_t num_winners, std::span<const Hash256> seeds,
                                  double z_max = kDefaultZMax, const DrawFunction& draw = {},
                                  unsigned workers = 1);

// Pearson statistic of the win counts against the uniform expectation n W / P.
double chi_square_statistic(const FairnessReport& report);

// Tab-separated: `#` header lines, then `digest\twins\tz_score` per participant.
std::string format_fairness_report(const FairnessReport& report);

} // namespace blocklot
