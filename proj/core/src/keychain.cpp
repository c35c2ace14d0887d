#include "trb/keychain.hpp"

#include "trb/errors.hpp"
#include "trb/modmath.hpp"

namespace trb {

BitSchedule BitSchedule::uniform(unsigned bits) {
    BitSchedule s;
    s.append(0, bits);
    return s;
}

void BitSchedule::append(uint64_t start_height, unsigned bits) {
    if (bits < 4) throw InvalidDifficultyError("schedule bits must be at least 4");
    if (entries.empty()) {
        if (start_height != 0) throw Error("first schedule entry must start at height 0");
    } else if (start_height <= entries.back().first) {
        throw Error("schedule start heights must be strictly increasing");
    }
    entries.emplace_back(start_height, bits);
}

unsigned BitSchedule::bits_at(uint64_t height) const {
    if (entries.empty()) throw Error("empty bit schedule");
    unsigned bits = entries.front().second;
    for (const auto& [start, b] : entries) {
        if (start > height) break;
        bits = b;
    }
    return bits;
}

BigUint subgroup_element(const BigUint& p, RandomSource& rng) {
    const BigUint one(1);
    const BigUint two(2);
    for (;;) {
        BigUint t = rng.in_range(two, p - two);
        BigUint e = mod_mul(t, t, p);
        if (e != one) return e;
    }
}

namespace {

PublicKey generate_key(RandomSource& rng, unsigned bits) {
    PublicKey k;
    k.p = gen_safe_prime(bits, rng);
    k.n = k.p >> 1;
    k.g = subgroup_element(k.p, rng);
    k.h = subgroup_element(k.p, rng);
    while (k.h == k.g) k.h = subgroup_element(k.p, rng);
    return k;
}

}  // namespace

PublicKey next_public_key(const PublicKey& prev, unsigned bits) {
    if (bits < 4) throw InvalidDifficultyError("key bits must be at least 4");
    DetRng rng = det_rng_from_biguint(prev.seed_sum());
    return generate_key(rng, bits);
}

PublicKey genesis_key(const BigUint& seed_constant, unsigned bits) {
    if (bits < 4) throw InvalidDifficultyError("key bits must be at least 4");
    DetRng rng = det_rng_from_biguint(seed_constant);
    return generate_key(rng, bits);
}

bool verify_keypair(const PublicKey& pk, const PrivateKey& sk) {
    if (sk.x.is_zero() || !(sk.x < pk.n)) return false;
    return mod_exp(pk.g, sk.x, pk.p) == pk.h;
}

KeyChain::KeyChain(PublicKey genesis) {
    cache_.emplace_back(0u, std::move(genesis));
}

PublicKey KeyChain::at(uint64_t height, const BitSchedule& schedule) {
    std::lock_guard lock(mu_);
    // Drop cached entries generated under different bits (schedule grew or
    // was replaced). Height 0 is pinned to the genesis key.
    for (size_t i = 1; i < cache_.size() && i <= height; ++i) {
        if (cache_[i].first != schedule.bits_at(i)) {
            cache_.resize(i);
            break;
        }
    }
    while (cache_.size() <= height) {
        uint64_t h = cache_.size();
        unsigned bits = schedule.bits_at(h);
        cache_.emplace_back(bits, next_public_key(cache_.back().second, bits));
    }
    return cache_[height].second;
}

}  // namespace trb
