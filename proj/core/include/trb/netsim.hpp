#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trb/chain.hpp"

namespace trb {

// Deterministic multi-node simulation: honest miners with configurable hash
// rates and uniform link latency, retargeting over long runs. Mining time is
// the walk-step count of a real seeded mine divided by the node's hash rate,
// so the true collision-time distribution drives block intervals.
struct SimConfig {
    uint32_t node_count = 5;
    std::vector<double> hash_rates;  // steps/second; one entry, or one per node
    uint32_t latency_min_ms = 20;
    uint32_t latency_max_ms = 200;
    uint64_t target_block_time = 30;  // seconds
    uint32_t retarget_window = 10;
    unsigned initial_bits = 14;
    uint64_t run_blocks = 300;
    uint64_t master_seed = 1;
    BigUint chain_seed = BigUint(20220704);

    // optional mid-run hash-rate step: all rates multiply by `factor` once
    // the canonical chain reaches `height` (0 disables)
    uint64_t hashrate_step_height = 0;
    double hashrate_step_factor = 1.0;

    // inject one timed-release message every k canonical blocks (0 disables),
    // targeted `lead` block times ahead via the release-height rule
    uint32_t message_every = 5;
    uint32_t message_lead = 5;

    double rate_for(uint32_t node) const;

    std::string to_text() const;
    static SimConfig parse(const std::string& text);
    static SimConfig load_file(const std::filesystem::path& path);
};

struct BlockRow {
    uint64_t height = 0;
    int64_t interval = 0;  // seconds since the previous block; can dip
                           // negative across a reorg boundary
    unsigned bits = 0;
    uint32_t forks_at_height = 0;
};

struct SimReport {
    std::vector<BlockRow> rows;
    double mean_interval = 0;
    double median_interval = 0;
    double stddev_interval = 0;
    uint64_t fork_count = 0;
    uint64_t max_reorg_depth = 0;
    std::vector<std::pair<uint64_t, unsigned>> epoch_bits;  // (start height, bits)

    // convergence witness: nodes sharing the reference tip once every
    // in-flight block has been delivered (mining stopped)
    uint32_t node_count = 0;
    uint32_t nodes_agreeing = 0;

    uint64_t messages_injected = 0;
    uint64_t messages_released = 0;
    uint64_t messages_unreleased = 0;
    double mean_blocks_late = 0;
    uint64_t max_blocks_late = 0;

    // Structured text: header records then one row per block.
    std::string to_text() const;

    double mean_interval_from(uint64_t first_height) const;
};

// Runs the event loop until the canonical chain of node 0 reaches
// cfg.run_blocks. Identical configs produce byte-identical reports. If
// `final_chain` is non-null it receives node 0's chain for post-run
// inspection.
SimReport run_simulation(const SimConfig& cfg,
                         std::unique_ptr<ChainState>* final_chain = nullptr);

// Ledger-data tamper experiment: mutate one header field of a sealed block,
// try the original solution (must be rejected), then measure the cost of
// re-mining the mutated block against honest mining of the original.
struct TamperReport {
    uint32_t trials = 0;
    uint32_t forged_accepts = 0;   // expected 0
    uint32_t control_trials = 0;
    uint32_t control_accepts = 0;  // byte-identical "mutations" must pass
    uint64_t median_remine_steps = 0;
    uint64_t median_honest_steps = 0;
    double remine_ratio = 0;       // median re-mine / median honest

    std::string to_text() const;
};

TamperReport tamper_experiment(const ChainState& chain, uint32_t trials, RandomSource& rng);

// Premature-release experiment: an independent textbook Pollard-rho attacker
// against the miner's header-driven walk on the same keys. The ratio of
// median step counts is the attacker's (non-)advantage.
struct PrematureRow {
    unsigned bits = 0;
    uint64_t median_miner_steps = 0;
    uint64_t median_attacker_steps = 0;
    double ratio = 0;  // attacker / miner
};

struct PrematureReport {
    std::vector<PrematureRow> rows;
    double miner_slope = 0;     // log2(median steps) per bit
    double attacker_slope = 0;

    std::string to_text() const;
};

PrematureReport premature_release_experiment(const BigUint& key_seed,
                                             const std::vector<unsigned>& bits_range,
                                             uint32_t samples_per_bits, uint64_t seed);

// Textbook Pollard rho for discrete logs (partition by y mod 3; y*h, y^2,
// y*g branches) with Floyd cycle detection; restarts re-randomize the branch
// multipliers to escape walk graphs whose cycles cannot yield a key. Returns
// the key and the number of group operations spent. Independent of the
// mining walk.
std::pair<PrivateKey, uint64_t> classic_pollard_rho(const PublicKey& pk, RandomSource& rng,
                                                    uint32_t max_restarts = 64);

}  // namespace trb
