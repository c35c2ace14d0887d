#include "trb/detrng.hpp"

#include "trb/errors.hpp"

namespace trb {

namespace {
constexpr uint32_t kMatrixA = 0x9908b0df;
constexpr uint32_t kUpperMask = 0x80000000;
constexpr uint32_t kLowerMask = 0x7fffffff;
constexpr size_t kM = 397;
}  // namespace

uint64_t RandomSource::next_u64() {
    // Low word first, matching rand_bits' little-endian word order.
    uint64_t lo = next_u32();
    uint64_t hi = next_u32();
    return lo | (hi << 32);
}

BigUint RandomSource::rand_bits(size_t nbits) {
    if (nbits == 0) return BigUint();
    size_t nwords = (nbits + 31) / 32;
    std::vector<uint32_t> words(nwords);
    for (auto& w : words) w = next_u32();
    size_t excess = nwords * 32 - nbits;
    words.back() >>= excess;
    return BigUint::from_words_le(words);
}

BigUint RandomSource::below(const BigUint& bound) {
    if (bound.is_zero()) throw Error("empty sampling range");
    size_t k = bound.bit_length();
    for (;;) {
        BigUint v = rand_bits(k);
        if (v < bound) return v;
    }
}

BigUint RandomSource::in_range(const BigUint& lo, const BigUint& hi) {
    if (hi < lo) throw Error("empty sampling range");
    return lo + below(hi - lo + BigUint(1));
}

DetRng::DetRng(std::span<const uint32_t> words)
    : seed_words_(words.begin(), words.end()) {
    if (seed_words_.empty()) seed_words_.push_back(0);
    init_by_array(seed_words_);
}

void DetRng::init_genrand(uint32_t s) {
    mt_[0] = s;
    for (size_t i = 1; i < kStateWords; ++i) {
        mt_[i] = 1812433253u * (mt_[i - 1] ^ (mt_[i - 1] >> 30)) + static_cast<uint32_t>(i);
    }
    mti_ = kStateWords;
}

void DetRng::init_by_array(std::span<const uint32_t> key) {
    init_genrand(19650218u);
    size_t i = 1, j = 0;
    size_t k = kStateWords > key.size() ? kStateWords : key.size();
    for (; k; --k) {
        mt_[i] = (mt_[i] ^ ((mt_[i - 1] ^ (mt_[i - 1] >> 30)) * 1664525u)) + key[j] +
                 static_cast<uint32_t>(j);
        ++i;
        ++j;
        if (i >= kStateWords) {
            mt_[0] = mt_[kStateWords - 1];
            i = 1;
        }
        if (j >= key.size()) j = 0;
    }
    for (k = kStateWords - 1; k; --k) {
        mt_[i] = (mt_[i] ^ ((mt_[i - 1] ^ (mt_[i - 1] >> 30)) * 1566083941u)) -
                 static_cast<uint32_t>(i);
        ++i;
        if (i >= kStateWords) {
            mt_[0] = mt_[kStateWords - 1];
            i = 1;
        }
    }
    mt_[0] = 0x80000000u;
    mti_ = kStateWords;
}

uint32_t DetRng::next_u32() {
    if (mti_ >= kStateWords) {
        for (size_t i = 0; i < kStateWords; ++i) {
            uint32_t y = (mt_[i] & kUpperMask) | (mt_[(i + 1) % kStateWords] & kLowerMask);
            mt_[i] = mt_[(i + kM) % kStateWords] ^ (y >> 1) ^ ((y & 1u) ? kMatrixA : 0u);
        }
        mti_ = 0;
    }
    uint32_t y = mt_[mti_++];
    y ^= y >> 11;
    y ^= (y << 7) & 0x9d2c5680u;
    y ^= (y << 15) & 0xefc60000u;
    y ^= y >> 18;
    return y;
}

DetRng det_rng_from_biguint(const BigUint& seed) {
    auto words = seed.to_words_le();
    return DetRng(std::span<const uint32_t>(words));
}

}  // namespace trb
