#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trb/biguint.hpp"
#include "trb/detrng.hpp"
#include "trb/keychain.hpp"

namespace trb {

// Hybrid ElGamal envelope bound to a block height. The KEM part is h^k with
// ephemeral c1 = g^k; the payload is XORed with a SHA-256 counter keystream
// over the shared secret, and the tag authenticates secret + payload.
struct Ciphertext {
    uint64_t target_height = 0;
    BigUint c1;
    std::vector<uint8_t> payload;
    std::array<uint8_t, 32> tag{};

    bool operator==(const Ciphertext&) const = default;
};

// Block height at which a message scheduled for wall-clock time t_release
// becomes decryptable: current height plus ceil((t_release - t_now) /
// block_time). The ceiling guarantees the height is never earlier than the
// real-valued schedule. Throws TimeInPastError if t_release < t_now.
uint64_t release_height(int64_t t_now, int64_t t_release, int64_t block_time,
                        uint64_t current_height);

Ciphertext encrypt(const PublicKey& pk, uint64_t target_height,
                   std::span<const uint8_t> plaintext, RandomSource& rng);

// Recovers the plaintext; throws IntegrityError when the tag does not match
// (wrong key or corrupted ciphertext).
std::vector<uint8_t> decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& ct);

// Wire layout: target_height (8B BE) | c1_len (2B BE) | c1 magnitude (BE) |
// tag (32B) | payload (rest). This is the transaction-metadata blob.
std::vector<uint8_t> encode_ciphertext(const Ciphertext& ct);
Ciphertext decode_ciphertext(std::span<const uint8_t> bytes);

}  // namespace trb
