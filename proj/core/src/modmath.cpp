#include "trb/modmath.hpp"

#include <openssl/evp.h>

#include <memory>

#include "trb/errors.hpp"

namespace trb {

namespace {

thread_local uint64_t g_mod_exp_calls = 0;

void require_modulus(const BigUint& m) {
    if (m < BigUint(2)) throw InvalidModulusError("modulus must be at least 2");
}

// Odd primes below 1000, for cheap candidate rejection before Miller-Rabin.
constexpr unsigned long kSmallPrimes[] = {
    3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,
    67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
    151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311, 313, 317, 331, 337, 347,
    349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419, 421, 431, 433, 439, 443,
    449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541, 547, 557, 563,
    569, 571, 577, 587, 593, 599, 601, 607, 613, 617, 619, 631, 641, 643, 647, 653, 659,
    661, 673, 677, 683, 691, 701, 709, 719, 727, 733, 739, 743, 751, 757, 761, 769, 773,
    787, 797, 809, 811, 821, 823, 827, 829, 839, 853, 857, 859, 863, 877, 881, 883, 887,
    907, 911, 919, 929, 937, 941, 947, 953, 967, 971, 977, 983, 991, 997};

// false = certainly composite, true = no small factor found (or n is itself
// a small prime).
bool passes_trial_division(const BigUint& n) {
    if (n < BigUint(2)) return false;
    if (!n.is_odd()) return n == BigUint(2);
    for (unsigned long d : kSmallPrimes) {
        if (mpz_cmp_ui(n.raw(), d) == 0) return true;
        if (mpz_fdiv_ui(n.raw(), d) == 0) return false;
    }
    return true;
}

bool miller_rabin(const BigUint& n, unsigned rounds, RandomSource& rng) {
    // n is odd and >= 5 here.
    const BigUint one(1);
    const BigUint n_minus_1 = n - one;
    const BigUint n_minus_2 = n - BigUint(2);

    // n - 1 = d * 2^r with d odd
    BigUint d = n_minus_1;
    size_t r = 0;
    while (!d.is_odd()) {
        d = d >> 1;
        ++r;
    }

    for (unsigned round = 0; round < rounds; ++round) {
        BigUint a = rng.in_range(BigUint(2), n_minus_2);
        BigUint x = mod_exp(a, d, n);
        if (x == one || x == n_minus_1) continue;
        bool witness = true;
        for (size_t i = 1; i < r; ++i) {
            x = mod_mul(x, x, n);
            if (x == n_minus_1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

EVP_MD_CTX* digest_ctx() {
    thread_local std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
        EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    return ctx.get();
}

}  // namespace

BigUint mod_exp(const BigUint& base, const BigUint& exp, const BigUint& m) {
    require_modulus(m);
    ++g_mod_exp_calls;
    BigUint r;
    mpz_powm(r.raw(), base.raw(), exp.raw(), m.raw());
    return r;
}

BigUint mod_inv(const BigUint& a, const BigUint& m) {
    require_modulus(m);
    BigUint r;
    if (mpz_invert(r.raw(), a.raw(), m.raw()) == 0) {
        throw NotInvertibleError("value has no inverse modulo " + m.to_string());
    }
    return r;
}

BigUint mod_mul(const BigUint& a, const BigUint& b, const BigUint& m) {
    require_modulus(m);
    return (a * b) % m;
}

BigUint mod_sub(const BigUint& a, const BigUint& b, const BigUint& m) {
    require_modulus(m);
    BigUint ar = a % m;
    BigUint br = b % m;
    if (ar < br) return ar + m - br;
    return ar - br;
}

uint64_t mod_exp_count() { return g_mod_exp_calls; }
void reset_mod_exp_count() { g_mod_exp_calls = 0; }

bool is_probable_prime(const BigUint& n, unsigned rounds, RandomSource& rng) {
    if (rounds < 16) throw Error("primality test needs at least 16 rounds");
    if (n < BigUint(2)) return false;
    if (n == BigUint(2) || n == BigUint(3)) return true;
    if (!n.is_odd()) return false;
    return miller_rabin(n, rounds, rng);
}

bool is_probable_prime(const BigUint& n, unsigned rounds) {
    DetRng rng = det_rng_from_biguint(n);
    return is_probable_prime(n, rounds, rng);
}

BigUint gen_safe_prime(unsigned bits, RandomSource& rng) {
    if (bits < 4) throw InvalidDifficultyError("safe primes need at least 4 bits");
    constexpr unsigned kMillerRabinRounds = 32;
    for (;;) {
        BigUint p = rng.rand_bits(bits);
        p.set_bit(bits - 1);  // exact bit length
        p.set_bit(0);         // odd
        BigUint q = p >> 1;
        if (!passes_trial_division(q)) continue;
        if (!miller_rabin(q, kMillerRabinRounds, rng)) continue;
        if (!passes_trial_division(p)) continue;
        if (!miller_rabin(p, kMillerRabinRounds, rng)) continue;
        return p;
    }
}

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
    std::array<uint8_t, 32> out{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = digest_ctx();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, out.data(), &len);
    return out;
}

std::array<uint8_t, 32> double_sha256(std::span<const uint8_t> data) {
    auto first = sha256(data);
    return sha256(first);
}

BigUint double_sha256_int(std::span<const uint8_t> data) {
    auto digest = double_sha256(data);
    return BigUint::from_bytes_be(digest);
}

}  // namespace trb
