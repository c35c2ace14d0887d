#pragma once

// Test-only oracles. Everything here works on plain machine words and never
// touches the library's big-integer or modular-arithmetic paths, so the two
// sides stay independent.

#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

inline uint64_t mul_mod(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>(static_cast<__uint128_t>(a % m) * (b % m) % m);
}

// Repeated multiplication, no square-and-multiply.
inline uint64_t pow_mod_naive(uint64_t base, uint64_t exp, uint64_t m) {
    uint64_t acc = 1 % m;
    for (uint64_t i = 0; i < exp; ++i) acc = mul_mod(acc, base, m);
    return acc;
}

inline bool is_prime_trial(uint64_t n) {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (uint64_t d = 3; d * d <= n; d += 2) {
        if (n % d == 0) return false;
    }
    return true;
}

inline bool is_safe_prime_trial(uint64_t p) {
    return is_prime_trial(p) && is_prime_trial((p - 1) / 2);
}

inline std::vector<uint64_t> safe_primes_in(uint64_t lo, uint64_t hi) {
    std::vector<uint64_t> out;
    for (uint64_t p = lo; p <= hi; ++p) {
        if (is_safe_prime_trial(p)) out.push_back(p);
    }
    return out;
}

// Exhaustive discrete log: smallest x in [1, n) with g^x = h (mod p).
inline std::optional<uint64_t> dlog_exhaustive(uint64_t g, uint64_t h, uint64_t p,
                                               uint64_t n) {
    uint64_t acc = 1;
    for (uint64_t x = 1; x < n; ++x) {
        acc = mul_mod(acc, g, p);
        if (acc == h) return x;
    }
    return std::nullopt;
}

// Smallest multiplicative inverse by scanning, for tiny moduli.
inline std::optional<uint64_t> inverse_exhaustive(uint64_t a, uint64_t m) {
    for (uint64_t x = 1; x < m; ++x) {
        if (mul_mod(a, x, m) == 1) return x;
    }
    return std::nullopt;
}

}  // namespace oracle
