#include "trb/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "trb/errors.hpp"
#include "trb/modmath.hpp"
#include "trb/trencrypt.hpp"

namespace trb {

double SimConfig::rate_for(uint32_t node) const {
    if (hash_rates.empty()) return 100.0;
    if (hash_rates.size() == 1) return hash_rates[0];
    if (node >= hash_rates.size()) throw Error("missing hash rate for node");
    return hash_rates[node];
}

std::string SimConfig::to_text() const {
    std::ostringstream out;
    out << "node_count=" << node_count << "\n";
    out << "hash_rates=";
    for (size_t i = 0; i < hash_rates.size(); ++i) {
        if (i) out << ",";
        out << hash_rates[i];
    }
    if (hash_rates.empty()) out << 100.0;
    out << "\n";
    out << "latency_min_ms=" << latency_min_ms << "\n";
    out << "latency_max_ms=" << latency_max_ms << "\n";
    out << "target_block_time=" << target_block_time << "\n";
    out << "retarget_window=" << retarget_window << "\n";
    out << "initial_bits=" << initial_bits << "\n";
    out << "run_blocks=" << run_blocks << "\n";
    out << "master_seed=" << master_seed << "\n";
    out << "chain_seed=" << chain_seed.to_string() << "\n";
    out << "hashrate_step_height=" << hashrate_step_height << "\n";
    out << "hashrate_step_factor=" << hashrate_step_factor << "\n";
    out << "message_every=" << message_every << "\n";
    out << "message_lead=" << message_lead << "\n";
    return out.str();
}

SimConfig SimConfig::parse(const std::string& text) {
    auto kv = parse_kv_text(text);
    SimConfig cfg;
    auto u64 = [&](const char* key, uint64_t dflt) -> uint64_t {
        auto it = kv.find(key);
        if (it == kv.end()) return dflt;
        try {
            return std::stoull(it->second);
        } catch (const std::exception&) {
            throw ParseError(std::string("invalid integer for ") + key);
        }
    };
    auto f64 = [&](const char* key, double dflt) -> double {
        auto it = kv.find(key);
        if (it == kv.end()) return dflt;
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw ParseError(std::string("invalid number for ") + key);
        }
    };
    cfg.node_count = static_cast<uint32_t>(u64("node_count", cfg.node_count));
    if (auto it = kv.find("hash_rates"); it != kv.end()) {
        cfg.hash_rates.clear();
        std::istringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                cfg.hash_rates.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ParseError("invalid hash_rates entry: " + item);
            }
        }
    }
    cfg.latency_min_ms = static_cast<uint32_t>(u64("latency_min_ms", cfg.latency_min_ms));
    cfg.latency_max_ms = static_cast<uint32_t>(u64("latency_max_ms", cfg.latency_max_ms));
    cfg.target_block_time = u64("target_block_time", cfg.target_block_time);
    cfg.retarget_window = static_cast<uint32_t>(u64("retarget_window", cfg.retarget_window));
    cfg.initial_bits = static_cast<unsigned>(u64("initial_bits", cfg.initial_bits));
    cfg.run_blocks = u64("run_blocks", cfg.run_blocks);
    cfg.master_seed = u64("master_seed", cfg.master_seed);
    if (auto it = kv.find("chain_seed"); it != kv.end()) {
        cfg.chain_seed = BigUint::from_string(it->second);
    }
    cfg.hashrate_step_height = u64("hashrate_step_height", cfg.hashrate_step_height);
    cfg.hashrate_step_factor = f64("hashrate_step_factor", cfg.hashrate_step_factor);
    cfg.message_every = static_cast<uint32_t>(u64("message_every", cfg.message_every));
    cfg.message_lead = static_cast<uint32_t>(u64("message_lead", cfg.message_lead));

    if (cfg.node_count == 0) throw ParseError("node_count must be positive");
    if (cfg.latency_max_ms < cfg.latency_min_ms) {
        throw ParseError("latency_max_ms must be >= latency_min_ms");
    }
    if (cfg.target_block_time == 0) throw ParseError("target_block_time must be positive");
    if (cfg.run_blocks == 0) throw ParseError("run_blocks must be positive");
    for (double r : cfg.hash_rates) {
        if (r <= 0) throw ParseError("hash rates must be positive");
    }
    if (cfg.hash_rates.size() > 1 && cfg.hash_rates.size() != cfg.node_count) {
        throw ParseError("hash_rates needs one entry, or one per node");
    }
    if (cfg.hashrate_step_factor <= 0) throw ParseError("hashrate_step_factor must be positive");
    return cfg;
}

SimConfig SimConfig::load_file(const std::filesystem::path& path) {
    return parse(read_text_file(path));
}

double SimReport::mean_interval_from(uint64_t first_height) const {
    double sum = 0;
    uint64_t count = 0;
    for (const auto& row : rows) {
        if (row.height < first_height) continue;
        sum += static_cast<double>(row.interval);
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

uint64_t median_u64(std::vector<uint64_t> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// least-squares slope of log2(median steps) against bits
double log2_slope(const std::vector<std::pair<unsigned, uint64_t>>& points) {
    if (points.size() < 2) return 0;
    double n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [bits, steps] : points) {
        double x = bits;
        double y = std::log2(static_cast<double>(std::max<uint64_t>(steps, 1)));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::string SimReport::to_text() const {
    std::ostringstream out;
    out << "blocks=" << rows.size() << "\n";
    out << "mean_interval=" << fmt(mean_interval) << "\n";
    out << "median_interval=" << fmt(median_interval) << "\n";
    out << "stddev_interval=" << fmt(stddev_interval) << "\n";
    out << "fork_count=" << fork_count << "\n";
    out << "max_reorg_depth=" << max_reorg_depth << "\n";
    out << "nodes_agreeing=" << nodes_agreeing << "/" << node_count << "\n";
    out << "epoch_bits=";
    for (size_t i = 0; i < epoch_bits.size(); ++i) {
        if (i) out << ",";
        out << epoch_bits[i].first << ":" << epoch_bits[i].second;
    }
    out << "\n";
    out << "messages_injected=" << messages_injected << "\n";
    out << "messages_released=" << messages_released << "\n";
    out << "messages_unreleased=" << messages_unreleased << "\n";
    out << "mean_blocks_late=" << fmt(mean_blocks_late) << "\n";
    out << "max_blocks_late=" << max_blocks_late << "\n";
    out << "# height interval bits forks\n";
    for (const auto& row : rows) {
        out << row.height << " " << row.interval << " " << row.bits << " "
            << row.forks_at_height << "\n";
    }
    return out.str();
}

namespace {

struct Event {
    int64_t t_ms;
    uint64_t seq;
    enum class Kind { Found, Arrival } kind;
    uint32_t node;
    uint64_t attempt;                    // Found only
    std::shared_ptr<const Block> block;  // sealed block

    bool operator>(const Event& o) const {
        if (t_ms != o.t_ms) return t_ms > o.t_ms;
        return seq > o.seq;
    }
};

struct SimNode {
    std::unique_ptr<ChainState> chain;
    Mempool pool;
    AccountId miner{};
    uint64_t current_attempt = 0;
};

struct InjectedMessage {
    uint64_t target_height;
    std::vector<uint8_t> plaintext;
};

}  // namespace

SimReport run_simulation(const SimConfig& cfg, std::unique_ptr<ChainState>* final_chain) {
    GenesisConfig genesis;
    genesis.seed = cfg.chain_seed;
    genesis.initial_bits = cfg.initial_bits;
    genesis.target_block_time = cfg.target_block_time;
    genesis.retarget_window = cfg.retarget_window;
    genesis.genesis_timestamp = 0;

    std::vector<SimNode> nodes;
    nodes.reserve(cfg.node_count);
    for (uint32_t i = 0; i < cfg.node_count; ++i) {
        SimNode n;
        n.chain = std::make_unique<ChainState>(genesis);
        n.miner = account_from_name("node-" + std::to_string(i));
        nodes.push_back(std::move(n));
    }

    DetRng sim_rng{static_cast<uint32_t>(cfg.master_seed),
                   static_cast<uint32_t>(cfg.master_seed >> 32), 0x5e551011u};

    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
    uint64_t event_seq = 0;
    uint64_t attempt_counter = 0;
    uint64_t max_reorg = 0;
    std::vector<InjectedMessage> injected;
    uint64_t next_message_height = cfg.message_every ? cfg.message_every : ~uint64_t{0};

    auto node_rate = [&](uint32_t i) {
        double rate = cfg.rate_for(i);
        if (cfg.hashrate_step_height != 0 &&
            nodes[i].chain->height() >= cfg.hashrate_step_height) {
            rate *= cfg.hashrate_step_factor;
        }
        return rate;
    };

    auto start_mining = [&](uint32_t i, int64_t now_ms) {
        SimNode& node = nodes[i];
        Block block = node.chain->assemble_block(node.pool, node.miner,
                                                 static_cast<uint64_t>(now_ms / 1000));
        PublicKey pk = node.chain->key_at(block.header.height);
        ++attempt_counter;
        DetRng rng{static_cast<uint32_t>(cfg.master_seed),
                   static_cast<uint32_t>(cfg.master_seed >> 32), i,
                   static_cast<uint32_t>(attempt_counter),
                   static_cast<uint32_t>(attempt_counter >> 32)};
        MineResult mined = mine_rolling(block.header, pk, rng);
        block.solution = mined.solution;
        block.header.nonce = mined.solution.nonce;

        double rate = node_rate(i);
        int64_t duration =
            std::max<int64_t>(1, std::llround(static_cast<double>(mined.stats.walk_steps) *
                                              1000.0 / rate));
        node.current_attempt = attempt_counter;
        queue.push(Event{now_ms + duration, ++event_seq, Event::Kind::Found, i,
                         attempt_counter, std::make_shared<Block>(std::move(block))});
    };

    auto maybe_inject_message = [&](int64_t now_ms) {
        // One message per `message_every` canonical blocks on node 0's view,
        // encrypted to the wall-clock release height but clamped to the
        // predictable key horizon.
        while (cfg.message_every && nodes[0].chain->height() >= next_message_height) {
            next_message_height += cfg.message_every;
            uint64_t now_s = static_cast<uint64_t>(now_ms / 1000);
            uint64_t cur_height = nodes[0].chain->height();
            uint64_t target = release_height(
                static_cast<int64_t>(now_s),
                static_cast<int64_t>(now_s + cfg.message_lead * cfg.target_block_time),
                static_cast<int64_t>(cfg.target_block_time), cur_height);
            target = std::min(target, nodes[0].chain->predict_horizon());
            if (target <= cur_height || target > cfg.run_blocks) continue;

            std::vector<uint8_t> plaintext(32);
            for (auto& byte : plaintext) byte = static_cast<uint8_t>(sim_rng.next_u32());
            PublicKey pk = nodes[0].chain->key_at(target);
            Ciphertext ct = encrypt(pk, target, plaintext, sim_rng);

            Transaction tx;
            tx.kind = TxKind::Timelock;
            tx.metadata = encode_ciphertext(ct);
            for (auto& node : nodes) node.pool.add(tx);
            injected.push_back(InjectedMessage{target, std::move(plaintext)});
        }
    };

    for (uint32_t i = 0; i < cfg.node_count; ++i) start_mining(i, 0);

    while (!queue.empty() && nodes[0].chain->height() < cfg.run_blocks) {
        Event ev = queue.top();
        queue.pop();
        SimNode& node = nodes[ev.node];

        if (ev.kind == Event::Kind::Found) {
            if (ev.attempt != node.current_attempt) continue;  // stale attempt
            SubmitResult res = node.chain->submit_block(*ev.block);
            if (res.accepted) {
                max_reorg = std::max(max_reorg, res.reorg_depth);
                node.pool.remove_included(ev.block->txs);
                for (uint32_t peer = 0; peer < cfg.node_count; ++peer) {
                    if (peer == ev.node) continue;
                    uint64_t span = cfg.latency_max_ms - cfg.latency_min_ms;
                    int64_t lat = static_cast<int64_t>(cfg.latency_min_ms);
                    if (span > 0) lat += static_cast<int64_t>(
                        sim_rng.below(BigUint(span + 1)).to_u64());
                    queue.push(Event{ev.t_ms + lat, ++event_seq, Event::Kind::Arrival, peer,
                                     0, ev.block});
                }
            }
            if (ev.node == 0) maybe_inject_message(ev.t_ms);
            start_mining(ev.node, ev.t_ms);
        } else {
            if (node.chain->find(header_hash(ev.block->header)) != nullptr) continue;
            SubmitResult res = node.chain->submit_block(*ev.block);
            if (res.accepted) {
                max_reorg = std::max(max_reorg, res.reorg_depth);
                node.pool.remove_included(ev.block->txs);
                if (ev.node == 0) maybe_inject_message(ev.t_ms);
                if (res.tip_changed) start_mining(ev.node, ev.t_ms);
            }
        }
    }

    // Drain in-flight deliveries (no further mining) so the report can
    // witness whether the nodes converge once the network quiesces.
    while (!queue.empty()) {
        Event ev = queue.top();
        queue.pop();
        if (ev.kind != Event::Kind::Arrival) continue;
        SimNode& node = nodes[ev.node];
        if (node.chain->find(header_hash(ev.block->header)) != nullptr) continue;
        SubmitResult res = node.chain->submit_block(*ev.block);
        if (res.accepted) max_reorg = std::max(max_reorg, res.reorg_depth);
    }

    // Report from node 0's canonical chain.
    SimReport report;
    const ChainState& chain0 = *nodes[0].chain;
    uint64_t final_height = std::min<uint64_t>(chain0.height(), cfg.run_blocks);
    std::vector<int64_t> intervals;
    intervals.reserve(final_height);
    unsigned last_bits = cfg.initial_bits;
    report.epoch_bits.emplace_back(0, cfg.initial_bits);
    for (uint64_t h = 1; h <= final_height; ++h) {
        const auto* rec = chain0.at_height(h);
        const auto* prev = chain0.at_height(h - 1);
        BlockRow row;
        row.height = h;
        row.interval = static_cast<int64_t>(rec->block.header.timestamp) -
                       static_cast<int64_t>(prev->block.header.timestamp);
        row.bits = rec->bits;
        row.forks_at_height = chain0.blocks_at_height(h) > 0
                                  ? chain0.blocks_at_height(h) - 1
                                  : 0;
        if (rec->bits != last_bits) {
            report.epoch_bits.emplace_back(h, rec->bits);
            last_bits = rec->bits;
        }
        intervals.push_back(row.interval);
        report.rows.push_back(row);
    }

    if (!intervals.empty()) {
        double sum = 0;
        for (int64_t v : intervals) sum += static_cast<double>(v);
        report.mean_interval = sum / static_cast<double>(intervals.size());
        std::vector<int64_t> sorted = intervals;
        std::sort(sorted.begin(), sorted.end());
        report.median_interval = static_cast<double>(sorted[sorted.size() / 2]);
        double var = 0;
        for (int64_t v : intervals) {
            double d = static_cast<double>(v) - report.mean_interval;
            var += d * d;
        }
        report.stddev_interval = std::sqrt(var / static_cast<double>(intervals.size()));
    }
    report.fork_count = chain0.block_count() - 1 - chain0.height();
    report.max_reorg_depth = max_reorg;
    report.node_count = cfg.node_count;
    for (const auto& node : nodes) {
        if (node.chain->tip() == chain0.tip()) ++report.nodes_agreeing;
    }

    report.messages_injected = injected.size();
    uint64_t late_sum = 0;
    for (const auto& msg : injected) {
        const auto& released = chain0.ledger().released;
        auto it = released.find(msg.target_height);
        bool hit = false;
        if (it != released.end()) {
            for (const auto& rec : it->second) {
                if (rec.plaintext == msg.plaintext) {
                    hit = true;
                    uint64_t late = rec.released_at - msg.target_height;
                    late_sum += late;
                    report.max_blocks_late = std::max(report.max_blocks_late, late);
                    break;
                }
            }
        }
        if (hit) {
            ++report.messages_released;
        } else {
            ++report.messages_unreleased;
        }
    }
    report.mean_blocks_late = report.messages_released
                                  ? static_cast<double>(late_sum) /
                                        static_cast<double>(report.messages_released)
                                  : 0.0;

    if (final_chain != nullptr) *final_chain = std::move(nodes[0].chain);
    return report;
}

std::string TamperReport::to_text() const {
    std::ostringstream out;
    out << "trials=" << trials << "\n";
    out << "forged_accepts=" << forged_accepts << "\n";
    out << "control_trials=" << control_trials << "\n";
    out << "control_accepts=" << control_accepts << "\n";
    out << "median_remine_steps=" << median_remine_steps << "\n";
    out << "median_honest_steps=" << median_honest_steps << "\n";
    out << "remine_ratio=" << fmt(remine_ratio) << "\n";
    return out.str();
}

TamperReport tamper_experiment(const ChainState& chain, uint32_t trials, RandomSource& rng) {
    if (chain.height() < 1) throw Error("tamper experiment needs at least one mined block");

    TamperReport report;
    report.trials = trials;
    std::vector<uint64_t> remine_steps;
    std::vector<uint64_t> honest_steps;
    remine_steps.reserve(trials);

    const uint64_t top = chain.height();
    for (uint32_t t = 0; t < trials; ++t) {
        uint64_t h = 1 + rng.below(BigUint(top)).to_u64();
        const auto* rec = chain.at_height(h);
        HeaderTemplate mutated = rec->block.header;

        switch (rng.below(BigUint(4)).to_u64()) {
            case 0: mutated.version += 1; break;
            case 1: mutated.timestamp += 1; break;
            case 2: {
                size_t byte = rng.below(BigUint(32)).to_u64();
                mutated.prev_hash[byte] ^= static_cast<uint8_t>(
                    1u << rng.below(BigUint(8)).to_u64());
                break;
            }
            default: {
                size_t byte = rng.below(BigUint(32)).to_u64();
                mutated.merkle_root[byte] ^= static_cast<uint8_t>(
                    1u << rng.below(BigUint(8)).to_u64());
                break;
            }
        }

        bool accepted = true;
        try {
            validate(mutated, rec->block.solution, rec->key);
        } catch (const InvalidSolutionError&) {
            accepted = false;
        }
        if (accepted) ++report.forged_accepts;

        // Cost of producing a valid replacement for the mutated block.
        MineResult remined = mine_rolling(mutated, rec->key, rng);
        remine_steps.push_back(remined.stats.walk_steps);
        validate(mutated, remined.solution, rec->key);  // sanity: must pass

        // Honest baseline on the unmodified header.
        HeaderTemplate honest_tmpl = rec->block.header;
        MineResult honest = mine_rolling(honest_tmpl, rec->key, rng);
        honest_steps.push_back(honest.stats.walk_steps);
    }

    // Control: a "mutation" that changes no serialized byte must still
    // validate with the original solution.
    report.control_trials = std::max<uint32_t>(1, trials / 10);
    for (uint32_t t = 0; t < report.control_trials; ++t) {
        uint64_t h = 1 + rng.below(BigUint(top)).to_u64();
        const auto* rec = chain.at_height(h);
        HeaderTemplate same = rec->block.header;
        same.version += 0;  // no byte changes
        try {
            validate(same, rec->block.solution, rec->key);
            ++report.control_accepts;
        } catch (const InvalidSolutionError&) {
        }
    }

    report.median_remine_steps = median_u64(remine_steps);
    report.median_honest_steps = median_u64(honest_steps);
    report.remine_ratio = report.median_honest_steps
                              ? static_cast<double>(report.median_remine_steps) /
                                    static_cast<double>(report.median_honest_steps)
                              : 0.0;
    return report;
}

std::pair<PrivateKey, uint64_t> classic_pollard_rho(const PublicKey& pk, RandomSource& rng,
                                                    uint32_t max_restarts) {
    uint64_t steps = 0;

    struct Node {
        BigUint y, a, b;
    };
    struct Multiplier {
        BigUint m, u, v;  // m = g^u * h^v
    };

    for (uint32_t attempt = 0; attempt <= max_restarts; ++attempt) {
        // The first attempt is the textbook walk (multiply by h, square,
        // multiply by g). With Floyd the hare only ever laps the tortoise,
        // so a cycle whose net exponent effect is trivial yields nothing
        // from any start; re-randomizing the multipliers rebuilds the walk
        // graph, the attacker-side analog of rolling the header.
        Multiplier m1{pk.h, 0, 1};
        Multiplier m2{pk.g, 1, 0};
        if (attempt > 0) {
            m1.u = rng.below(pk.n);
            m1.v = rng.below(pk.n);
            m2.u = rng.below(pk.n);
            m2.v = rng.below(pk.n);
            m1.m = mod_mul(mod_exp(pk.g, m1.u, pk.p), mod_exp(pk.h, m1.v, pk.p), pk.p);
            m2.m = mod_mul(mod_exp(pk.g, m2.u, pk.p), mod_exp(pk.h, m2.v, pk.p), pk.p);
        }

        auto advance = [&](const Node& s) {
            ++steps;
            Node next;
            switch ((s.y % BigUint(3)).to_u64()) {
                case 1:
                    next.y = mod_mul(s.y, m1.m, pk.p);
                    next.a = (s.a + m1.u) % pk.n;
                    next.b = (s.b + m1.v) % pk.n;
                    break;
                case 0:  // y^2
                    next.y = mod_mul(s.y, s.y, pk.p);
                    next.a = mod_mul(s.a, BigUint(2), pk.n);
                    next.b = mod_mul(s.b, BigUint(2), pk.n);
                    break;
                default:
                    next.y = mod_mul(s.y, m2.m, pk.p);
                    next.a = (s.a + m2.u) % pk.n;
                    next.b = (s.b + m2.v) % pk.n;
                    break;
            }
            return next;
        };

        BigUint a0 = rng.below(pk.n);
        BigUint b0 = rng.below(pk.n);
        Node tortoise{mod_mul(mod_exp(pk.g, a0, pk.p), mod_exp(pk.h, b0, pk.p), pk.p), a0, b0};
        Node hare = tortoise;

        uint64_t budget = pk.n.bit_length() <= 62 ? pk.n.to_u64() : ~uint64_t{0};
        for (uint64_t i = 0; i < budget; ++i) {
            Node t_next = advance(tortoise);
            Node mid = advance(hare);
            Node h_next = advance(mid);
            if (t_next.y == tortoise.y || mid.y == hare.y || h_next.y == mid.y) {
                break;  // stuck walk, restart
            }
            tortoise = std::move(t_next);
            hare = std::move(h_next);
            if (tortoise.y == hare.y) {
                BigUint r = mod_sub(hare.b, tortoise.b, pk.n);
                if (r.is_zero()) break;  // degenerate, restart
                BigUint s = mod_sub(tortoise.a, hare.a, pk.n);
                PrivateKey key{mod_mul(s, mod_inv(r, pk.n), pk.n)};
                if (verify_keypair(pk, key)) return {key, steps};
                break;
            }
        }
    }
    throw MiningExhaustedError("classic rho found no usable collision");
}

std::string PrematureReport::to_text() const {
    std::ostringstream out;
    out << "# bits miner_median attacker_median ratio\n";
    for (const auto& row : rows) {
        out << row.bits << " " << row.median_miner_steps << " " << row.median_attacker_steps
            << " " << fmt(row.ratio) << "\n";
    }
    out << "miner_slope=" << fmt(miner_slope) << "\n";
    out << "attacker_slope=" << fmt(attacker_slope) << "\n";
    return out.str();
}

PrematureReport premature_release_experiment(const BigUint& key_seed,
                                             const std::vector<unsigned>& bits_range,
                                             uint32_t samples_per_bits, uint64_t seed) {
    for (unsigned bits : bits_range) {
        if (bits > 24) {
            throw InvalidDifficultyError("premature-release experiment is desk-scale only "
                                         "(bits <= 24)");
        }
    }

    PrematureReport report;
    std::vector<std::pair<unsigned, uint64_t>> miner_points;
    std::vector<std::pair<unsigned, uint64_t>> attacker_points;

    for (unsigned bits : bits_range) {
        std::vector<uint64_t> miner_steps;
        std::vector<uint64_t> attacker_steps;
        miner_steps.reserve(samples_per_bits);
        attacker_steps.reserve(samples_per_bits);

        PublicKey key = genesis_key(key_seed + BigUint(bits), bits);
        HeaderTemplate tmpl;  // fixed synthetic header; only the nonce varies
        tmpl.height = 1;
        tmpl.key_bits = static_cast<uint16_t>(bits);

        for (uint32_t i = 0; i < samples_per_bits; ++i) {
            DetRng miner_rng{static_cast<uint32_t>(seed), bits, i, 0xa11ce};
            HeaderTemplate roll = tmpl;
            roll.timestamp = 1700000000 + i;  // fresh walk graph per sample
            MineResult mined = mine_rolling(roll, key, miner_rng);
            miner_steps.push_back(mined.stats.walk_steps);

            DetRng attacker_rng{static_cast<uint32_t>(seed), bits, i, 0xb0b};
            auto [attacker_key, steps] = classic_pollard_rho(key, attacker_rng);
            attacker_steps.push_back(steps);
            if (!(attacker_key == mined.key)) {
                throw Error("attacker and miner disagree on the private key");
            }

            key = next_public_key(key, bits);
        }

        PrematureRow row;
        row.bits = bits;
        row.median_miner_steps = median_u64(miner_steps);
        row.median_attacker_steps = median_u64(attacker_steps);
        row.ratio = row.median_miner_steps
                        ? static_cast<double>(row.median_attacker_steps) /
                              static_cast<double>(row.median_miner_steps)
                        : 0.0;
        report.rows.push_back(row);
        miner_points.emplace_back(bits, row.median_miner_steps);
        attacker_points.emplace_back(bits, row.median_attacker_steps);
    }

    report.miner_slope = log2_slope(miner_points);
    report.attacker_slope = log2_slope(attacker_points);
    return report;
}

}  // namespace trb
