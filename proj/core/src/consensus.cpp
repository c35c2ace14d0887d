#include "trb/consensus.hpp"

#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "trb/errors.hpp"
#include "trb/modmath.hpp"

namespace trb {

BigUint header_hash_int(const HeaderTemplate& tmpl, const BigUint& nonce, const BigUint& p) {
    if (p < BigUint(2)) throw InvalidModulusError("header hash modulus must be at least 2");
    return double_sha256_int(serialize_header(tmpl, nonce)) % p;
}

Partition partition_of(const BigUint& hv) {
    switch ((hv % BigUint(3)).to_u64()) {
        case 0: return Partition::S0;
        case 1: return Partition::S1;
        default: return Partition::S2;
    }
}

WalkState walk_step(const WalkState& s, const HeaderTemplate& tmpl, const PublicKey& pk) {
    const BigUint hv = header_hash_int(tmpl, s.y, pk.p);
    const BigUint pm1 = pk.p - BigUint(1);
    WalkState next;
    switch (partition_of(hv)) {
        case Partition::S0:
            next.y = mod_exp(s.y, hv, pk.p);
            next.a = mod_mul(s.a, hv, pm1);
            next.b = mod_mul(s.b, hv, pm1);
            break;
        case Partition::S1:
            next.y = mod_mul(mod_exp(pk.g, hv, pk.p), s.y, pk.p);
            next.a = (s.a + hv) % pm1;
            next.b = s.b;
            break;
        case Partition::S2:
            next.y = mod_mul(mod_exp(pk.h, hv, pk.p), s.y, pk.p);
            next.a = s.a;
            next.b = (s.b + hv) % pm1;
            break;
    }
    return next;
}

PrivateKey derive_private_key(const BigUint& a1, const BigUint& b1, const BigUint& a2,
                              const BigUint& b2, const BigUint& n) {
    BigUint r = mod_sub(b2, b1, n);
    if (r.is_zero()) {
        throw DegenerateCollisionError("b-exponent difference is 0 mod n");
    }
    BigUint s = mod_sub(a1, a2, n);
    return PrivateKey{mod_mul(s, mod_inv(r, n), n)};
}

namespace {

// Applies the y mapping rule once. This is the single group operation
// validation performs on the nonce.
BigUint apply_y_rule(const HeaderTemplate& tmpl, const BigUint& w, const PublicKey& pk) {
    const BigUint hv = header_hash_int(tmpl, w, pk.p);
    switch (partition_of(hv)) {
        case Partition::S0: return mod_exp(w, hv, pk.p);
        case Partition::S1: return mod_mul(mod_exp(pk.g, hv, pk.p), w, pk.p);
        default: return mod_mul(mod_exp(pk.h, hv, pk.p), w, pk.p);
    }
}

}  // namespace

namespace {

// Adds the local stats into an external accumulator on scope exit, so the
// work spent before a throw is still accounted for.
struct StatsFlush {
    MineStats* dst;
    const MineStats* src;
    ~StatsFlush() {
        if (dst != nullptr) {
            dst->walk_steps += src->walk_steps;
            dst->restarts += src->restarts;
            dst->tortoise_steps += src->tortoise_steps;
        }
    }
};

}  // namespace

MineResult mine(const HeaderTemplate& tmpl, const PublicKey& pk, RandomSource& rng,
                const MineOptions& opts) {
    MineStats stats;
    StatsFlush flush{opts.counter, &stats};

    // Iteration budget per attempt is n (the loop bound of the walk),
    // saturated to a machine word; desk-scale attempts collide around
    // sqrt(n) anyway.
    uint64_t budget = ~uint64_t{0};
    if (pk.n.bit_length() <= 62) budget = pk.n.to_u64();

    for (uint32_t attempt = 0; attempt <= opts.max_restarts; ++attempt) {
        BigUint a0 = rng.below(pk.n);
        BigUint b0 = rng.below(pk.n);
        BigUint y0 = mod_mul(mod_exp(pk.g, a0, pk.p), mod_exp(pk.h, b0, pk.p), pk.p);

        WalkState tortoise{y0, a0, b0};
        WalkState hare = tortoise;
        uint64_t iterations = 0;

        while (iterations < budget) {
            if (opts.cancel && opts.cancel->load(std::memory_order_relaxed)) {
                throw CancelledError("mining cancelled");
            }
            ++iterations;

            WalkState t_next = walk_step(tortoise, tmpl, pk);
            WalkState mid = walk_step(hare, tmpl, pk);
            WalkState h_next = walk_step(mid, tmpl, pk);
            stats.walk_steps += 3;

            // A step that does not move its y is a stuck walk (degenerate
            // reduced hash); restart with fresh randomness.
            if (t_next.y == tortoise.y || mid.y == hare.y || h_next.y == mid.y) break;
            tortoise = std::move(t_next);
            hare = std::move(h_next);

            if (tortoise.y == hare.y) {
                PrivateKey key;
                try {
                    key = derive_private_key(tortoise.a, tortoise.b, hare.a, hare.b, pk.n);
                } catch (const DegenerateCollisionError&) {
                    break;
                }
                if (!verify_keypair(pk, key)) break;
                stats.tortoise_steps = iterations;
                MiningSolution sol;
                sol.a1 = tortoise.a;
                sol.b1 = tortoise.b;
                sol.a2 = hare.a;
                sol.b2 = hare.b;
                sol.nonce = mid.y;  // single-step preimage of the collision value
                return MineResult{std::move(sol), std::move(key), stats};
            }
        }
        ++stats.restarts;
    }
    throw MiningExhaustedError("no collision found within the restart budget");
}

MineResult mine_parallel(const HeaderTemplate& tmpl, const PublicKey& pk, unsigned threads,
                         const MineOptions& opts) {
    SystemRng sys;
    auto fresh_seed = [&sys] {
        std::vector<uint32_t> words(8);
        for (auto& w : words) w = sys.next_u32();
        return words;
    };

    if (threads <= 1) {
        auto seed = fresh_seed();
        DetRng rng{std::span<const uint32_t>(seed)};
        return mine(tmpl, pk, rng, opts);
    }

    std::atomic<bool> found{false};
    std::optional<MineResult> result;
    std::mutex result_mu;
    std::vector<std::thread> pool;

    for (unsigned i = 0; i < threads; ++i) {
        pool.emplace_back([&, seed = fresh_seed()] {
            DetRng rng{std::span<const uint32_t>(seed)};
            MineOptions local = opts;
            local.cancel = &found;
            try {
                MineResult r = mine(tmpl, pk, rng, local);
                std::lock_guard lock(result_mu);
                if (!result) {
                    result = std::move(r);
                    found.store(true);
                }
            } catch (const CancelledError&) {
            } catch (const MiningExhaustedError&) {
            }
        });
    }
    for (auto& t : pool) t.join();
    if (opts.cancel && opts.cancel->load()) throw CancelledError("mining cancelled");
    if (!result) throw MiningExhaustedError("no thread found a collision");
    return std::move(*result);
}

MineResult mine_rolling(HeaderTemplate& tmpl, const PublicKey& pk, RandomSource& rng,
                        const MineOptions& opts, uint32_t max_rolls) {
    // Give up on a template quickly; a fresh graph is cheaper than more
    // starts on a barren one.
    MineStats total;
    MineOptions per_roll = opts;
    per_roll.max_restarts = std::min<uint32_t>(opts.max_restarts, 8);
    per_roll.counter = &total;

    for (uint32_t roll = 0; roll < max_rolls; ++roll) {
        try {
            MineResult r = mine(tmpl, pk, rng, per_roll);
            r.stats.walk_steps = total.walk_steps;
            r.stats.restarts = total.restarts;
            if (opts.counter != nullptr) {
                opts.counter->walk_steps += total.walk_steps;
                opts.counter->restarts += total.restarts;
                opts.counter->tortoise_steps += r.stats.tortoise_steps;
            }
            return r;
        } catch (const MiningExhaustedError&) {
            tmpl.timestamp += 1;
        }
    }
    if (opts.counter != nullptr) {
        opts.counter->walk_steps += total.walk_steps;
        opts.counter->restarts += total.restarts;
    }
    throw MiningExhaustedError("no usable template within the roll budget");
}

PrivateKey validate(const HeaderTemplate& tmpl, const MiningSolution& sol, const PublicKey& pk) {
    // One application of the y rule to the header nonce must reproduce
    // both committed collision values.
    BigUint z = apply_y_rule(tmpl, sol.nonce, pk);
    BigUint u1 = mod_mul(mod_exp(pk.g, sol.a1, pk.p), mod_exp(pk.h, sol.b1, pk.p), pk.p);
    if (z != u1) {
        throw InvalidSolutionError(InvalidSolutionError::Step::NonceRule,
                                   "nonce image does not match the first exponent pair");
    }
    BigUint u2 = mod_mul(mod_exp(pk.g, sol.a2, pk.p), mod_exp(pk.h, sol.b2, pk.p), pk.p);
    if (z != u2) {
        throw InvalidSolutionError(InvalidSolutionError::Step::NonceRule,
                                   "nonce image does not match the second exponent pair");
    }
    // Then derive (rejecting degenerate tuples) and check the pairing.
    PrivateKey key;
    try {
        key = derive_private_key(sol.a1, sol.b1, sol.a2, sol.b2, pk.n);
    } catch (const DegenerateCollisionError&) {
        throw InvalidSolutionError(InvalidSolutionError::Step::Degenerate,
                                   "exponent tracks are degenerate (b2 = b1 mod n)");
    }
    if (!verify_keypair(pk, key)) {
        throw InvalidSolutionError(InvalidSolutionError::Step::KeyMismatch,
                                   "derived key does not pair with the public key");
    }
    return key;
}

unsigned retarget(const std::vector<uint64_t>& recent_intervals, uint64_t target_seconds,
                  unsigned current_bits) {
    if (recent_intervals.empty()) throw Error("retarget needs at least one interval");
    if (target_seconds == 0) throw Error("target block time must be positive");
    double sum = 0;
    for (uint64_t v : recent_intervals) sum += static_cast<double>(v);
    double mean = sum / static_cast<double>(recent_intervals.size());

    // Expected work is 2^(bits/2), so matching the target needs
    // delta = 2*log2(target/mean): blocks arriving too fast raise the bit
    // length, blocks arriving too slow lower it. Clamped to +-2 per epoch.
    long delta;
    if (mean <= 0) {
        delta = 2;  // instantaneous blocks: hardest allowed step up
    } else {
        double ratio = static_cast<double>(target_seconds) / mean;
        delta = std::lround(2.0 * std::log2(ratio));
        if (delta > 2) delta = 2;
        if (delta < -2) delta = -2;
    }
    long next = static_cast<long>(current_bits) + delta;
    if (next < 4) next = 4;
    return static_cast<unsigned>(next);
}

namespace {

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>(static_cast<__uint128_t>(a) * b % m);
}

}  // namespace

PrivateKey brute_force_dlog(const PublicKey& pk) {
    if (pk.n.bit_length() > 24) {
        throw Error("brute_force_dlog is guarded to n <= 2^24");
    }
    const uint64_t p = pk.p.to_u64();
    const uint64_t n = pk.n.to_u64();
    const uint64_t g = pk.g.to_u64() % p;
    const uint64_t h = pk.h.to_u64() % p;

    if (n <= (1u << 12)) {
        // Plain exhaustive search.
        uint64_t acc = 1;
        for (uint64_t x = 1; x < n; ++x) {
            acc = mulmod_u64(acc, g, p);
            if (acc == h) return PrivateKey{BigUint(x)};
        }
        throw NoKeyError("no exponent in (0, n) satisfies g^x = h");
    }

    // Baby-step giant-step: x = i*m + j with g^j stored for j < m.
    const uint64_t m = static_cast<uint64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    std::unordered_map<uint64_t, uint64_t> baby;
    baby.reserve(m * 2);
    uint64_t e = 1;
    for (uint64_t j = 0; j < m; ++j) {
        baby.emplace(e, j);
        e = mulmod_u64(e, g, p);
    }
    // g^-m via Fermat: g^(p-1-m) mod p
    uint64_t gm_inv = 1;
    {
        uint64_t base = g, exp = p - 1 - (m % (p - 1));
        while (exp) {
            if (exp & 1) gm_inv = mulmod_u64(gm_inv, base, p);
            base = mulmod_u64(base, base, p);
            exp >>= 1;
        }
    }
    uint64_t gamma = h;
    for (uint64_t i = 0; i <= m; ++i) {
        auto it = baby.find(gamma);
        if (it != baby.end()) {
            uint64_t x = (i * m + it->second) % n;
            if (x != 0) {
                // Confirm: candidate arithmetic was mod p, key space is mod n.
                if (mod_exp(pk.g, BigUint(x), pk.p) == pk.h) return PrivateKey{BigUint(x)};
            }
        }
        gamma = mulmod_u64(gamma, gm_inv, p);
    }
    throw NoKeyError("no exponent in (0, n) satisfies g^x = h");
}

std::vector<uint8_t> encode_solution(const MiningSolution& sol) {
    ByteWriter w;
    auto put = [&w](const BigUint& v) {
        auto bytes = v.to_bytes_be();
        if (bytes.size() > 0xffff) throw Error("solution magnitude too large for wire format");
        w.be16(static_cast<uint16_t>(bytes.size()));
        w.bytes(bytes);
    };
    put(sol.a1);
    put(sol.b1);
    put(sol.a2);
    put(sol.b2);
    put(sol.nonce);
    return w.take();
}

MiningSolution decode_solution(ByteReader& r) {
    auto get = [&r]() {
        uint16_t len = r.be16();
        return BigUint::from_bytes_be(r.bytes(len));
    };
    MiningSolution sol;
    sol.a1 = get();
    sol.b1 = get();
    sol.a2 = get();
    sol.b2 = get();
    sol.nonce = get();
    return sol;
}

}  // namespace trb
