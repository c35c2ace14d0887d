#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "trb/biguint.hpp"
#include "trb/detrng.hpp"

namespace trb {

// Modular arithmetic, primality and hash-to-integer primitives. Everything
// here is deterministic; the only randomness is what the caller passes in.

// base^exp mod m. Throws InvalidModulusError for m < 2.
BigUint mod_exp(const BigUint& base, const BigUint& exp, const BigUint& m);

// a^-1 mod m. Throws NotInvertibleError when gcd(a, m) != 1,
// InvalidModulusError for m < 2.
BigUint mod_inv(const BigUint& a, const BigUint& m);

BigUint mod_mul(const BigUint& a, const BigUint& b, const BigUint& m);

// (a - b) mod m with both operands reduced first, so b > a is fine.
BigUint mod_sub(const BigUint& a, const BigUint& b, const BigUint& m);

// Number of mod_exp invocations on this thread since the last reset. The
// validation-cost checks count group exponentiations through this.
uint64_t mod_exp_count();
void reset_mod_exp_count();

// Miller-Rabin with `rounds` bases drawn from `rng` (uniform in [2, n-2]).
// A false result is certain compositeness; true is prime up to error
// 4^-rounds. rounds must be >= 16.
bool is_probable_prime(const BigUint& n, unsigned rounds, RandomSource& rng);

// Deterministic variant: bases come from a DetRng seeded with n itself, so
// the answer is a pure function of n.
bool is_probable_prime(const BigUint& n, unsigned rounds = 32);

// Safe prime of exactly `bits` bits: p prime and (p-1)/2 prime. Candidates
// are random odd values with the top bit forced, drawn from `rng`; the same
// generator state always yields the same prime. Throws
// InvalidDifficultyError for bits < 4.
BigUint gen_safe_prime(unsigned bits, RandomSource& rng);

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);
std::array<uint8_t, 32> double_sha256(std::span<const uint8_t> data);

// int(SHA256(SHA256(bytes))) with the digest read as a big-endian 256-bit
// integer.
BigUint double_sha256_int(std::span<const uint8_t> data);

}  // namespace trb
