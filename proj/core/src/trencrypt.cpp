#include "trb/trencrypt.hpp"

#include "trb/errors.hpp"
#include "trb/modmath.hpp"
#include "trb/serial.hpp"

namespace trb {

namespace {

// keystream block i = SHA256(secret_bytes || be64(i)); blocks are
// concatenated and truncated to the requested length.
std::vector<uint8_t> keystream(std::span<const uint8_t> secret_bytes, size_t len) {
    std::vector<uint8_t> out;
    out.reserve(len);
    std::vector<uint8_t> block_input(secret_bytes.begin(), secret_bytes.end());
    block_input.resize(secret_bytes.size() + 8);
    uint64_t counter = 0;
    while (out.size() < len) {
        for (int i = 0; i < 8; ++i) {
            block_input[secret_bytes.size() + i] =
                static_cast<uint8_t>(counter >> (56 - 8 * i));
        }
        auto block = sha256(block_input);
        size_t take = std::min(block.size(), len - out.size());
        out.insert(out.end(), block.begin(), block.begin() + take);
        ++counter;
    }
    return out;
}

std::array<uint8_t, 32> compute_tag(std::span<const uint8_t> secret_bytes,
                                    std::span<const uint8_t> payload) {
    std::vector<uint8_t> buf(secret_bytes.begin(), secret_bytes.end());
    buf.insert(buf.end(), payload.begin(), payload.end());
    return sha256(buf);
}

std::vector<uint8_t> xor_bytes(std::span<const uint8_t> data, std::span<const uint8_t> pad) {
    std::vector<uint8_t> out(data.size());
    for (size_t i = 0; i < data.size(); ++i) out[i] = data[i] ^ pad[i];
    return out;
}

}  // namespace

uint64_t release_height(int64_t t_now, int64_t t_release, int64_t block_time,
                        uint64_t current_height) {
    if (block_time <= 0) throw Error("block_time must be positive");
    if (t_release < t_now) throw TimeInPastError("release time is in the past");
    uint64_t delta = static_cast<uint64_t>(t_release - t_now);
    uint64_t blocks = (delta + static_cast<uint64_t>(block_time) - 1) /
                      static_cast<uint64_t>(block_time);
    return current_height + blocks;
}

Ciphertext encrypt(const PublicKey& pk, uint64_t target_height,
                   std::span<const uint8_t> plaintext, RandomSource& rng) {
    const BigUint one(1);
    BigUint k = rng.in_range(one, pk.n - one);
    Ciphertext ct;
    ct.target_height = target_height;
    ct.c1 = mod_exp(pk.g, k, pk.p);
    BigUint s = mod_exp(pk.h, k, pk.p);
    auto secret_bytes = s.to_bytes_be();
    ct.payload = xor_bytes(plaintext, keystream(secret_bytes, plaintext.size()));
    ct.tag = compute_tag(secret_bytes, ct.payload);
    return ct;
}

std::vector<uint8_t> decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& ct) {
    BigUint s = mod_exp(ct.c1, sk.x, pk.p);
    auto secret_bytes = s.to_bytes_be();
    if (compute_tag(secret_bytes, ct.payload) != ct.tag) {
        throw IntegrityError("ciphertext tag mismatch");
    }
    return xor_bytes(ct.payload, keystream(secret_bytes, ct.payload.size()));
}

std::vector<uint8_t> encode_ciphertext(const Ciphertext& ct) {
    auto c1_bytes = ct.c1.to_bytes_be();
    if (c1_bytes.size() > 0xffff) throw Error("c1 too large for wire format");
    ByteWriter w;
    w.be64(ct.target_height);
    w.be16(static_cast<uint16_t>(c1_bytes.size()));
    w.bytes(c1_bytes);
    w.bytes(ct.tag);
    w.bytes(ct.payload);
    return w.take();
}

Ciphertext decode_ciphertext(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    Ciphertext ct;
    ct.target_height = r.be64();
    uint16_t c1_len = r.be16();
    ct.c1 = BigUint::from_bytes_be(r.bytes(c1_len));
    auto tag = r.bytes(32);
    std::copy(tag.begin(), tag.end(), ct.tag.begin());
    auto payload = r.rest();
    ct.payload.assign(payload.begin(), payload.end());
    return ct;
}

}  // namespace trb
