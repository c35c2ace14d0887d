#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "trb/biguint.hpp"
#include "trb/block.hpp"
#include "trb/detrng.hpp"
#include "trb/keychain.hpp"

namespace trb {

// One node of the pseudo-random walk. The defining condition is
// y = g^a * h^b (mod p) at every step; exponents are tracked mod (p-1).
struct WalkState {
    BigUint y;
    BigUint a;
    BigUint b;

    bool operator==(const WalkState&) const = default;
};

// The broadcastable proof that seals a block. nonce is the walk element
// whose single mapping-function image equals the collision value, which is
// what lets validation run in a constant number of group operations.
struct MiningSolution {
    BigUint a1, b1, a2, b2;
    BigUint nonce;

    bool operator==(const MiningSolution&) const = default;
};

enum class Partition { S0, S1, S2 };

// Reduced header hash: double-SHA256 of the canonical header serialized with
// the given nonce, taken mod p.
BigUint header_hash_int(const HeaderTemplate& tmpl, const BigUint& nonce, const BigUint& p);

// Branch selector for the walk: hv mod 3.
Partition partition_of(const BigUint& hv);

// One step of the partitioned walk. With hv = header_hash_int(tmpl, y, p):
//   S0: y' = y^hv,      a' = a*hv mod (p-1), b' = b*hv mod (p-1)
//   S1: y' = g^hv * y,  a' = a+hv mod (p-1), b' = b
//   S2: y' = h^hv * y,  a' = a,              b' = b+hv mod (p-1)
WalkState walk_step(const WalkState& s, const HeaderTemplate& tmpl, const PublicKey& pk);

// x = (a1 - a2) * (b2 - b1)^-1 mod n. Throws DegenerateCollisionError when
// the b-difference vanishes mod n.
PrivateKey derive_private_key(const BigUint& a1, const BigUint& b1, const BigUint& a2,
                              const BigUint& b2, const BigUint& n);

struct MineStats {
    uint64_t walk_steps = 0;         // total mapping-function applications
    uint64_t tortoise_steps = 0;     // iterations of the successful attempt
    uint32_t restarts = 0;
};

struct MineOptions {
    uint32_t max_restarts = 64;
    const std::atomic<bool>* cancel = nullptr;
    // When set, walk_steps/restarts accumulate here on every exit path,
    // including exhaustion, so total work stays visible across retries.
    MineStats* counter = nullptr;
};

struct MineResult {
    MiningSolution solution;
    PrivateKey key;
    MineStats stats;
};

// Pollard-rho mining with Floyd cycle detection: tortoise and hare share one
// random start and advance at single/double pace until the y values collide;
// the two exponent tracks then give the private key. Restarts with fresh
// randomness on degenerate collisions, stuck walks, or an exhausted
// iteration budget. Throws MiningExhaustedError after max_restarts attempts,
// CancelledError if the cancel flag trips.
MineResult mine(const HeaderTemplate& tmpl, const PublicKey& pk, RandomSource& rng,
                const MineOptions& opts = {});

// Runs `threads` independent attempts concurrently (OS-seeded); first
// success cancels the rest.
MineResult mine_parallel(const HeaderTemplate& tmpl, const PublicKey& pk, unsigned threads,
                         const MineOptions& opts = {});

// Practical mining driver. A template can be barren: when the walk graph's
// dominant cycle sits entirely in one additive partition, every collision is
// degenerate and no choice of start helps (the hare only ever laps the
// tortoise, so the exponent tracks differ by whole loops). Rolling the
// timestamp rebuilds the graph, exactly like rolling an extra nonce. The
// template's timestamp field is advanced in place; stats accumulate across
// rolls. Throws MiningExhaustedError after max_rolls barren templates.
MineResult mine_rolling(HeaderTemplate& tmpl, const PublicKey& pk, RandomSource& rng,
                        const MineOptions& opts = {}, uint32_t max_rolls = 64);

// The constant-cost validation: applies the y mapping rule once to the
// solution nonce and checks it reproduces both committed collision values,
// then derives the key and checks it pairs with the public key. Exactly six
// modular exponentiations regardless of bit length. Throws
// InvalidSolutionError naming the failed step; returns the derived key.
PrivateKey validate(const HeaderTemplate& tmpl, const MiningSolution& sol, const PublicKey& pk);

// Difficulty update at an epoch boundary: bits move by round(2*log2(mean /
// target)) clamped to [-2, +2], never below 4. Callers apply this only every
// retarget_window blocks; bits are frozen within an epoch.
unsigned retarget(const std::vector<uint64_t>& recent_intervals, uint64_t target_seconds,
                  unsigned current_bits);

// Exhaustive / baby-step-giant-step discrete-log oracle, guarded to
// n <= 2^24. Throws NoKeyError if no exponent in (0, n) works.
PrivateKey brute_force_dlog(const PublicKey& pk);

// Wire format: five length-prefixed big-endian magnitudes
// (a1, b1, a2, b2, nonce), each 2-byte BE length then the magnitude.
std::vector<uint8_t> encode_solution(const MiningSolution& sol);
MiningSolution decode_solution(ByteReader& r);

}  // namespace trb
