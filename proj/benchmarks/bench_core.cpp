#include <benchmark/benchmark.h>

#include "trb/chain.hpp"
#include "trb/consensus.hpp"
#include "trb/modmath.hpp"

using namespace trb;

namespace {

HeaderTemplate bench_template(unsigned bits) {
    HeaderTemplate t;
    t.prev_hash.fill(0x5a);
    t.merkle_root.fill(0xa5);
    t.timestamp = 1700000000;
    t.height = 1;
    t.key_bits = static_cast<uint16_t>(bits);
    return t;
}

}  // namespace

static void BM_DoubleSha256Int(benchmark::State& state) {
    std::vector<uint8_t> data(static_cast<size_t>(state.range(0)), 0x42);
    for (auto _ : state) {
        benchmark::DoNotOptimize(double_sha256_int(data));
    }
}
BENCHMARK(BM_DoubleSha256Int)->Arg(92)->Arg(1024);

static void BM_ModExp(benchmark::State& state) {
    DetRng rng{1u};
    unsigned bits = static_cast<unsigned>(state.range(0));
    BigUint p = gen_safe_prime(bits, rng);
    BigUint base = rng.below(p);
    BigUint exp = rng.below(p);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mod_exp(base, exp, p));
    }
}
BENCHMARK(BM_ModExp)->Arg(16)->Arg(24)->Arg(64);

static void BM_WalkStep(benchmark::State& state) {
    unsigned bits = static_cast<unsigned>(state.range(0));
    PublicKey pk = genesis_key(BigUint(12345), bits);
    HeaderTemplate t = bench_template(bits);
    DetRng rng{2u};
    BigUint a0 = rng.below(pk.n);
    BigUint b0 = rng.below(pk.n);
    WalkState s{mod_mul(mod_exp(pk.g, a0, pk.p), mod_exp(pk.h, b0, pk.p), pk.p), a0, b0};
    for (auto _ : state) {
        s = walk_step(s, t, pk);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_WalkStep)->Arg(16)->Arg(24);

static void BM_Mine(benchmark::State& state) {
    unsigned bits = static_cast<unsigned>(state.range(0));
    PublicKey pk = genesis_key(BigUint(777), bits);
    DetRng rng{3u};
    uint64_t salt = 0;
    for (auto _ : state) {
        HeaderTemplate t = bench_template(bits);
        t.timestamp += ++salt;
        benchmark::DoNotOptimize(mine_rolling(t, pk, rng));
    }
}
BENCHMARK(BM_Mine)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_Validate(benchmark::State& state) {
    unsigned bits = static_cast<unsigned>(state.range(0));
    PublicKey pk = genesis_key(BigUint(888), bits);
    HeaderTemplate t = bench_template(bits);
    DetRng rng{4u};
    MineResult r = mine(t, pk, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate(t, r.solution, pk));
    }
}
BENCHMARK(BM_Validate)->Arg(16)->Arg(24);

static void BM_MerkleRoot(benchmark::State& state) {
    std::vector<Transaction> txs;
    for (int i = 0; i < state.range(0); ++i) {
        Transaction tx = make_coinbase(account_from_name("m"), 50);
        tx.signature[0] = static_cast<uint8_t>(i);
        txs.push_back(std::move(tx));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(merkle_root(txs));
    }
}
BENCHMARK(BM_MerkleRoot)->Arg(1)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
