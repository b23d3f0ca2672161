#include "blocklot/beacon.hpp"
#include "blocklot/ledger.hpp"
#include "blocklot/lottery.hpp"
#include "blocklot/serialize.hpp"
#include "blocklot/verification.hpp"

#include <benchmark/benchmark.h>

#include <thread>

namespace {

using namespace blocklot;

std::vector<ParticipantDigest> members(std::size_t n) {
    std::vector<ParticipantDigest> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ParticipantDigest::of("m" + std::to_string(i), AuthToken{}));
    return out;
}

BlockHeader genesis_header() {
    BlockHeader h;
    h.version = 1;
    h.merkle_root = fixed_from_hex<32>("4a5e1e4baab89f3a32518a88c31bc87f618f76673e2cc77ab2127b7afdeda33b");
    h.timestamp = 1231006505;
    h.bits = 0x1d00ffff;
    h.nonce = 2083236893;
    return h;
}

void BM_RandomOracle(benchmark::State& state) {
    Hash256 source{};
    for (auto _ : state) {
        const auto out = random_oracle(source);
        source = out.next_source;
        benchmark::DoNotOptimize(out.value);
    }
}
BENCHMARK(BM_RandomOracle);

void BM_BlockHash(benchmark::State& state) {
    const BlockHeader h = genesis_header();
    for (auto _ : state) benchmark::DoNotOptimize(compute_block_hash(h));
}
BENCHMARK(BM_BlockHash);

void BM_Draw(benchmark::State& state) {
    const auto m = members(static_cast<std::size_t>(state.range(0)));
    const Hash256 seed = compute_block_hash(genesis_header());
    for (auto _ : state) benchmark::DoNotOptimize(fisher_yates_draw(m, 1, seed));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Draw)->RangeMultiplier(10)->Range(10, 100'000)->Complexity(benchmark::oN);

void BM_SerializeEvent(benchmark::State& state) {
    LotteryEvent e;
    e.event_id = std::string(32, 'a');
    e.name = "bench";
    e.member_list = members(static_cast<std::size_t>(state.range(0)));
    e.subscribe_tx_ids.assign(e.member_list.size(), std::string(64, 'b'));
    for (auto _ : state) benchmark::DoNotOptimize(parse_event(export_event(e)));
}
BENCHMARK(BM_SerializeEvent)->Arg(10)->Arg(1000);

void BM_LedgerPut(benchmark::State& state) {
    Ledger ledger({static_cast<std::size_t>(state.range(0))}, std::make_shared<DeterministicEntropy>("bench"));
    const std::string value(512, 'v');
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(ledger.put_state("k" + std::to_string(i++ % 1000), value));
}
BENCHMARK(BM_LedgerPut)->Arg(1)->Arg(3)->Arg(7);

void BM_MajorityRead(benchmark::State& state) {
    Ledger ledger({static_cast<std::size_t>(state.range(0))}, std::make_shared<DeterministicEntropy>("bench"));
    ledger.put_state("k", std::string(2048, 'v'));
    for (auto _ : state) benchmark::DoNotOptimize(ledger.majority_read("k"));
}
BENCHMARK(BM_MajorityRead)->Arg(3)->Arg(7);

void BM_FairnessTrial(benchmark::State& state) {
    const auto m = members(10);
    const auto seeds = seed_schedule(Hash256{}, 10'000);
    const unsigned workers = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_fairness_trial(m, 1, seeds, 4.0, {}, workers));
}
BENCHMARK(BM_FairnessTrial)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
