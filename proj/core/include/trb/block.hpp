#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trb/biguint.hpp"
#include "trb/serial.hpp"

namespace trb {

using Hash32 = std::array<uint8_t, 32>;
using AccountId = std::array<uint8_t, 32>;

std::string hex_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> hex_decode(std::string_view hex);
Hash32 hash32_from_hex(std::string_view hex);

// Canonical header layout (the mining preimage, bit-exact):
//   version (4B BE) | prev_hash (32B) | merkle_root (32B) | timestamp (8B BE)
//   | height (8B BE) | key_bits (2B BE) | nonce_len (2B BE) | nonce (BE
//   magnitude, minimal)
// Serialization is injective: nonce_len is always the minimal byte length.
struct BlockHeader {
    uint32_t version = 1;
    Hash32 prev_hash{};
    Hash32 merkle_root{};
    uint64_t timestamp = 0;
    uint64_t height = 0;
    uint16_t key_bits = 0;
    BigUint nonce;

    bool operator==(const BlockHeader&) const = default;
};

// During mining all non-nonce fields are frozen; the nonce slot is whatever
// walk element is being hashed.
using HeaderTemplate = BlockHeader;

// Nonces above 512 bytes (2^4096) exceed the serialization bound.
constexpr size_t kMaxNonceBytes = 512;

std::vector<uint8_t> serialize_header(const BlockHeader& header);
std::vector<uint8_t> serialize_header(const BlockHeader& header, const BigUint& nonce_override);
BlockHeader deserialize_header(ByteReader& r);
Hash32 header_hash(const BlockHeader& header);  // double SHA-256

enum class TxKind : uint8_t {
    Coinbase = 0,
    Transfer = 1,
    Timelock = 2,
};

// Signature bytes are carried but never verified; the ledger is account
// based with the minimum structure the consensus experiments need.
struct Transaction {
    TxKind kind = TxKind::Transfer;
    AccountId from{};
    AccountId to{};
    uint64_t amount = 0;
    uint64_t fee = 0;
    std::vector<uint8_t> metadata;  // Ciphertext wire blob for Timelock
    std::array<uint8_t, 64> signature{};

    bool operator==(const Transaction&) const = default;

    size_t serialized_size() const;
};

Transaction make_coinbase(const AccountId& miner, uint64_t amount);

std::vector<uint8_t> serialize_tx(const Transaction& tx);
Transaction deserialize_tx(ByteReader& r);
Hash32 tx_hash(const Transaction& tx);

// Binary Merkle tree over double-SHA256 leaves; odd levels duplicate the
// last node; a single leaf is its own root. Throws EmptyBlockError on an
// empty list.
Hash32 merkle_root(std::span<const Transaction> txs);

}  // namespace trb
