#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <utility>
#include <vector>

#include "trb/biguint.hpp"
#include "trb/detrng.hpp"

namespace trb {

// Per-block public key for the discrete-log puzzle. p is a safe prime, g and
// h live in the quadratic-residue subgroup of prime order n = (p-1)/2.
struct PublicKey {
    BigUint p;
    BigUint g;
    BigUint h;
    BigUint n;

    bool operator==(const PublicKey&) const = default;

    // Sum fed to the generator of the next key in the chain.
    BigUint seed_sum() const { return p + g + h; }
};

struct PrivateKey {
    BigUint x;

    bool operator==(const PrivateKey&) const = default;
};

// Piecewise-constant bit-length schedule: (start_height, bits) entries with
// strictly increasing start heights, first entry at height 0, bits >= 4.
struct BitSchedule {
    std::vector<std::pair<uint64_t, unsigned>> entries;

    static BitSchedule uniform(unsigned bits);

    void append(uint64_t start_height, unsigned bits);
    unsigned bits_at(uint64_t height) const;
};

// Random element of the order-n subgroup, excluding 1: draws t in [2, p-2]
// and squares it. The discrete log of the result is never computed, so key
// generation cannot leak private keys.
BigUint subgroup_element(const BigUint& p, RandomSource& rng);

// The chained-key step: seed the generator with p+g+h of the previous key,
// generate a fresh safe prime of `bits` bits and two subgroup elements.
// h is redrawn while equal to g.
PublicKey next_public_key(const PublicKey& prev, unsigned bits);

// Height-0 key, derived from the protocol's hard-coded seed constant via the
// same generation procedure (synthetic predecessor (0, 0, seed)).
PublicKey genesis_key(const BigUint& seed_constant, unsigned bits);

// True iff 0 < x < n and g^x = h (mod p).
bool verify_keypair(const PublicKey& pk, const PrivateKey& sk);

// Memoizing accessor for keys along one chain. Safe for concurrent callers;
// keys are returned by value.
class KeyChain {
public:
    explicit KeyChain(PublicKey genesis);

    PublicKey at(uint64_t height, const BitSchedule& schedule);

private:
    std::mutex mu_;
    // (bits used at that height, key); index == height.
    std::deque<std::pair<unsigned, PublicKey>> cache_;
};

}  // namespace trb
