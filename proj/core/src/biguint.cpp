#include "trb/biguint.hpp"

#include <cctype>
#include <ostream>

#include "trb/errors.hpp"

namespace trb {

void BigUint::throw_negative() {
    throw UnderflowError("BigUint cannot hold a negative value");
}

BigUint BigUint::from_string(std::string_view s) {
    if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        return from_hex(s.substr(2));
    }
    if (s.empty()) throw ParseError("empty integer literal");
    BigUint r;
    if (mpz_set_str(r.v_, std::string(s).c_str(), 10) != 0 || mpz_sgn(r.v_) < 0) {
        throw ParseError("invalid decimal integer: " + std::string(s));
    }
    return r;
}

BigUint BigUint::from_hex(std::string_view s) {
    if (s.empty()) throw ParseError("empty hex literal");
    BigUint r;
    if (mpz_set_str(r.v_, std::string(s).c_str(), 16) != 0 || mpz_sgn(r.v_) < 0) {
        throw ParseError("invalid hex integer: " + std::string(s));
    }
    return r;
}

BigUint BigUint::from_bytes_be(std::span<const uint8_t> bytes) {
    BigUint r;
    if (!bytes.empty()) mpz_import(r.v_, bytes.size(), 1, 1, 0, 0, bytes.data());
    return r;
}

BigUint BigUint::from_words_le(std::span<const uint32_t> words) {
    BigUint r;
    if (!words.empty()) mpz_import(r.v_, words.size(), -1, 4, 0, 0, words.data());
    return r;
}

std::string BigUint::to_string() const {
    char* s = mpz_get_str(nullptr, 10, v_);
    std::string r(s);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(s, r.size() + 1);
    return r;
}

std::string BigUint::to_hex() const {
    char* s = mpz_get_str(nullptr, 16, v_);
    std::string r(s);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(s, r.size() + 1);
    return r;
}

std::vector<uint8_t> BigUint::to_bytes_be() const {
    if (is_zero()) return {};
    std::vector<uint8_t> out(byte_length());
    size_t count = 0;
    mpz_export(out.data(), &count, 1, 1, 0, 0, v_);
    out.resize(count);
    return out;
}

std::vector<uint32_t> BigUint::to_words_le() const {
    if (is_zero()) return {0};
    std::vector<uint32_t> out((bit_length() + 31) / 32);
    size_t count = 0;
    mpz_export(out.data(), &count, -1, 4, 0, 0, v_);
    out.resize(count);
    return out;
}

uint64_t BigUint::to_u64() const {
    if (bit_length() > 64) throw OverflowError("value does not fit in 64 bits");
    uint64_t r = 0;
    if (!is_zero()) mpz_export(&r, nullptr, -1, 8, 0, 0, v_);
    return r;
}

BigUint operator+(const BigUint& a, const BigUint& b) {
    BigUint r;
    mpz_add(r.v_, a.v_, b.v_);
    return r;
}

BigUint operator-(const BigUint& a, const BigUint& b) {
    if (mpz_cmp(a.v_, b.v_) < 0) throw UnderflowError("BigUint subtraction underflow");
    BigUint r;
    mpz_sub(r.v_, a.v_, b.v_);
    return r;
}

BigUint operator*(const BigUint& a, const BigUint& b) {
    BigUint r;
    mpz_mul(r.v_, a.v_, b.v_);
    return r;
}

BigUint operator/(const BigUint& a, const BigUint& b) {
    if (b.is_zero()) throw Error("division by zero");
    BigUint r;
    mpz_fdiv_q(r.v_, a.v_, b.v_);
    return r;
}

BigUint operator%(const BigUint& a, const BigUint& b) {
    if (b.is_zero()) throw Error("modulo by zero");
    BigUint r;
    mpz_fdiv_r(r.v_, a.v_, b.v_);
    return r;
}

BigUint operator<<(const BigUint& a, unsigned s) {
    BigUint r;
    mpz_mul_2exp(r.v_, a.v_, s);
    return r;
}

BigUint operator>>(const BigUint& a, unsigned s) {
    BigUint r;
    mpz_fdiv_q_2exp(r.v_, a.v_, s);
    return r;
}

BigUint& BigUint::operator+=(const BigUint& o) {
    mpz_add(v_, v_, o.v_);
    return *this;
}

BigUint& BigUint::operator-=(const BigUint& o) {
    if (mpz_cmp(v_, o.v_) < 0) throw UnderflowError("BigUint subtraction underflow");
    mpz_sub(v_, v_, o.v_);
    return *this;
}

std::ostream& operator<<(std::ostream& os, const BigUint& v) { return os << v.to_string(); }

}  // namespace trb
