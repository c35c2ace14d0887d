#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "trb/biguint.hpp"

namespace trb {

// Source of uniform 32-bit words. Callers that need reproducibility pass a
// DetRng; production encryption passes SystemRng.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual uint32_t next_u32() = 0;

    uint64_t next_u64();

    // Uniform value of exactly `nbits` random bits. Words are drawn least
    // significant first and the top word is truncated, so the layout matches
    // the conventional getrandbits construction.
    BigUint rand_bits(size_t nbits);

    // Uniform in [0, bound) by rejection over bit_length(bound-1 .. ) draws.
    BigUint below(const BigUint& bound);

    // Uniform in [lo, hi] inclusive.
    BigUint in_range(const BigUint& lo, const BigUint& hi);
};

// MT19937 with the Matsumoto-Nishimura array-seeding procedure
// (init_by_array). The same seed words produce the same stream on every
// platform, which is what makes the public-key chain reproducible.
class DetRng final : public RandomSource {
public:
    static constexpr size_t kStateWords = 624;

    explicit DetRng(uint32_t word) : DetRng(std::span<const uint32_t>(&word, 1)) {}
    explicit DetRng(std::span<const uint32_t> words);
    DetRng(std::initializer_list<uint32_t> words)
        : DetRng(std::span<const uint32_t>(words.begin(), words.size())) {}

    uint32_t next_u32() override;

    const std::vector<uint32_t>& seed_words() const { return seed_words_; }

private:
    void init_genrand(uint32_t s);
    void init_by_array(std::span<const uint32_t> key);

    std::array<uint32_t, kStateWords> mt_{};
    size_t mti_ = kStateWords + 1;
    std::vector<uint32_t> seed_words_;
};

// The seed integer is decomposed into its little-endian 32-bit words (zero
// gives the single word 0) and fed to the array-seeding procedure.
DetRng det_rng_from_biguint(const BigUint& seed);

// OS entropy behind the RandomSource interface.
class SystemRng final : public RandomSource {
public:
    uint32_t next_u32() override { return dev_(); }

private:
    std::random_device dev_;
};

}  // namespace trb
