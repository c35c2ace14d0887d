#include "trb/block.hpp"

#include "trb/errors.hpp"
#include "trb/modmath.hpp"

namespace trb {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";
}

std::string hex_encode(std::span<const uint8_t> bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

std::vector<uint8_t> hex_decode(std::string_view hex) {
    if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw ParseError("invalid hex digit");
    };
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    }
    return out;
}

Hash32 hash32_from_hex(std::string_view hex) {
    auto bytes = hex_decode(hex);
    if (bytes.size() != 32) throw ParseError("expected 32 bytes of hex");
    Hash32 h;
    std::copy(bytes.begin(), bytes.end(), h.begin());
    return h;
}

std::vector<uint8_t> serialize_header(const BlockHeader& header) {
    return serialize_header(header, header.nonce);
}

std::vector<uint8_t> serialize_header(const BlockHeader& header, const BigUint& nonce_override) {
    auto nonce_bytes = nonce_override.to_bytes_be();
    if (nonce_bytes.size() > kMaxNonceBytes) {
        throw NonceTooLargeError("nonce exceeds the 512-byte serialization bound");
    }
    ByteWriter w;
    w.be32(header.version);
    w.bytes(header.prev_hash);
    w.bytes(header.merkle_root);
    w.be64(header.timestamp);
    w.be64(header.height);
    w.be16(header.key_bits);
    w.be16(static_cast<uint16_t>(nonce_bytes.size()));
    w.bytes(nonce_bytes);
    return w.take();
}

BlockHeader deserialize_header(ByteReader& r) {
    BlockHeader h;
    h.version = r.be32();
    auto prev = r.bytes(32);
    std::copy(prev.begin(), prev.end(), h.prev_hash.begin());
    auto root = r.bytes(32);
    std::copy(root.begin(), root.end(), h.merkle_root.begin());
    h.timestamp = r.be64();
    h.height = r.be64();
    h.key_bits = r.be16();
    uint16_t nonce_len = r.be16();
    auto nonce_bytes = r.bytes(nonce_len);
    // only the minimal encoding is canonical; reject padded forms
    if (!nonce_bytes.empty() && nonce_bytes.front() == 0) {
        throw ParseError("non-minimal nonce encoding");
    }
    h.nonce = BigUint::from_bytes_be(nonce_bytes);
    return h;
}

Hash32 header_hash(const BlockHeader& header) {
    return double_sha256(serialize_header(header));
}

size_t Transaction::serialized_size() const {
    // kind + from + to + amount + fee + metadata_len + metadata + signature
    return 1 + 32 + 32 + 8 + 8 + 4 + metadata.size() + 64;
}

Transaction make_coinbase(const AccountId& miner, uint64_t amount) {
    Transaction tx;
    tx.kind = TxKind::Coinbase;
    tx.to = miner;
    tx.amount = amount;
    tx.fee = 0;
    return tx;
}

std::vector<uint8_t> serialize_tx(const Transaction& tx) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(tx.kind));
    w.bytes(tx.from);
    w.bytes(tx.to);
    w.be64(tx.amount);
    w.be64(tx.fee);
    if (tx.metadata.size() > 0xffffffffull) throw Error("metadata too large");
    w.be32(static_cast<uint32_t>(tx.metadata.size()));
    w.bytes(tx.metadata);
    w.bytes(tx.signature);
    return w.take();
}

Transaction deserialize_tx(ByteReader& r) {
    Transaction tx;
    uint8_t kind = r.u8();
    if (kind > 2) throw ParseError("unknown transaction kind");
    tx.kind = static_cast<TxKind>(kind);
    auto from = r.bytes(32);
    std::copy(from.begin(), from.end(), tx.from.begin());
    auto to = r.bytes(32);
    std::copy(to.begin(), to.end(), tx.to.begin());
    tx.amount = r.be64();
    tx.fee = r.be64();
    uint32_t meta_len = r.be32();
    auto meta = r.bytes(meta_len);
    tx.metadata.assign(meta.begin(), meta.end());
    auto sig = r.bytes(64);
    std::copy(sig.begin(), sig.end(), tx.signature.begin());
    return tx;
}

Hash32 tx_hash(const Transaction& tx) { return double_sha256(serialize_tx(tx)); }

Hash32 merkle_root(std::span<const Transaction> txs) {
    if (txs.empty()) throw EmptyBlockError("a block needs at least the coinbase");
    std::vector<Hash32> level;
    level.reserve(txs.size());
    for (const auto& tx : txs) level.push_back(tx_hash(tx));
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Hash32> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            std::array<uint8_t, 64> pair;
            std::copy(level[i].begin(), level[i].end(), pair.begin());
            std::copy(level[i + 1].begin(), level[i + 1].end(), pair.begin() + 32);
            next.push_back(double_sha256(pair));
        }
        level = std::move(next);
    }
    return level.front();
}

}  // namespace trb
