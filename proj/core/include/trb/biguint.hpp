#pragma once

#include <gmp.h>

#include <compare>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace trb {

// Arbitrary-precision non-negative integer.
//
// Thin value wrapper over GMP's mpz_t restricted to magnitudes: subtraction
// below zero throws instead of going negative, so every value is always in
// canonical non-negative form. All group elements, exponents and moduli in
// the protocol are BigUint.
class BigUint {
public:
    BigUint() { mpz_init(v_); }

    template <std::integral T>
    BigUint(T x) {  // NOLINT: implicit by design (literals everywhere)
        if constexpr (std::is_signed_v<T>) {
            if (x < 0) throw_negative();
        }
        auto v = static_cast<unsigned long long>(x);
        mpz_init(v_);
        if (v != 0) mpz_import(v_, 1, 1, sizeof(v), 0, 0, &v);
    }

    BigUint(const BigUint& o) { mpz_init_set(v_, o.v_); }

    BigUint(BigUint&& o) noexcept {
        mpz_init(v_);
        mpz_swap(v_, o.v_);
    }

    BigUint& operator=(const BigUint& o) {
        if (this != &o) mpz_set(v_, o.v_);
        return *this;
    }

    BigUint& operator=(BigUint&& o) noexcept {
        mpz_swap(v_, o.v_);
        return *this;
    }

    ~BigUint() { mpz_clear(v_); }

    // Decimal, or hex with an 0x/0X prefix.
    static BigUint from_string(std::string_view s);
    static BigUint from_hex(std::string_view s);
    // Big-endian magnitude; empty input is zero.
    static BigUint from_bytes_be(std::span<const uint8_t> bytes);
    // Little-endian 32-bit words (word 0 least significant).
    static BigUint from_words_le(std::span<const uint32_t> words);

    std::string to_string() const;  // decimal
    std::string to_hex() const;     // lowercase, no prefix
    // Minimal big-endian magnitude; zero encodes as the empty sequence.
    std::vector<uint8_t> to_bytes_be() const;
    // Minimal little-endian 32-bit words; zero yields the single word 0.
    std::vector<uint32_t> to_words_le() const;
    uint64_t to_u64() const;  // throws OverflowError above 2^64-1

    size_t bit_length() const { return is_zero() ? 0 : mpz_sizeinbase(v_, 2); }
    size_t byte_length() const { return (bit_length() + 7) / 8; }
    bool bit(size_t i) const { return mpz_tstbit(v_, i) != 0; }
    void set_bit(size_t i) { mpz_setbit(v_, i); }
    bool is_zero() const { return mpz_sgn(v_) == 0; }
    bool is_odd() const { return mpz_odd_p(v_) != 0; }

    friend BigUint operator+(const BigUint& a, const BigUint& b);
    friend BigUint operator-(const BigUint& a, const BigUint& b);  // throws UnderflowError
    friend BigUint operator*(const BigUint& a, const BigUint& b);
    friend BigUint operator/(const BigUint& a, const BigUint& b);  // throws on b == 0
    friend BigUint operator%(const BigUint& a, const BigUint& b);
    friend BigUint operator<<(const BigUint& a, unsigned s);
    friend BigUint operator>>(const BigUint& a, unsigned s);

    BigUint& operator+=(const BigUint& o);
    BigUint& operator-=(const BigUint& o);

    bool operator==(const BigUint& o) const { return mpz_cmp(v_, o.v_) == 0; }

    std::strong_ordering operator<=>(const BigUint& o) const {
        int c = mpz_cmp(v_, o.v_);
        if (c < 0) return std::strong_ordering::less;
        if (c > 0) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    // Raw handle for the modular-arithmetic layer.
    const mpz_t& raw() const { return v_; }
    mpz_t& raw() { return v_; }

private:
    [[noreturn]] static void throw_negative();

    mpz_t v_;
};

std::ostream& operator<<(std::ostream& os, const BigUint& v);

}  // namespace trb
