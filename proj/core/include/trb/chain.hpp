#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "trb/block.hpp"
#include "trb/consensus.hpp"
#include "trb/genesis.hpp"
#include "trb/keychain.hpp"

namespace trb {

struct Block {
    BlockHeader header;
    std::vector<Transaction> txs;
    MiningSolution solution;

    bool operator==(const Block&) const = default;
};

std::vector<uint8_t> serialize_block(const Block& block);
Block deserialize_block(ByteReader& r);

// Expected mining cost of a block is 2^(bits/2), which is irrational for odd
// bits. Cumulative work is kept exactly as a + b*sqrt(2) with integer a, b,
// so fork choice never depends on floating-point rounding.
struct Work {
    BigUint a;
    BigUint b;

    static Work zero() { return {}; }
    static Work block_weight(unsigned bits);

    Work operator+(const Work& o) const { return Work{a + o.a, b + o.b}; }
    bool operator==(const Work&) const = default;
    bool operator<(const Work& o) const;

    double to_double() const;
};

// Pending transactions ordered by fee per serialized byte (highest first),
// FIFO on ties. Selection is greedy under the byte budget.
class Mempool {
public:
    void add(Transaction tx);
    std::vector<Transaction> select(size_t max_bytes) const;
    void remove_included(std::span<const Transaction> txs);
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    struct Entry {
        Transaction tx;
        uint64_t seq;
        size_t bytes;
    };
    std::vector<Entry> entries_;
    uint64_t next_seq_ = 0;
};

struct ReleaseRecord {
    uint64_t target_height = 0;
    uint64_t released_at = 0;  // height of the block whose key decrypted it
    std::vector<uint8_t> plaintext;

    bool operator==(const ReleaseRecord&) const = default;
};

struct FailedRelease {
    uint64_t target_height = 0;
    uint64_t at_height = 0;
    Hash32 txid{};
    std::string reason;
};

// Key pair revealed by mining a given height.
struct HeightKeys {
    PublicKey pk;
    PrivateKey sk;
};

// Materialized view of one branch: balances, released plaintexts, pending
// (not yet decryptable) blobs. Blocks must be applied in height order.
struct Ledger {
    std::map<AccountId, uint64_t> balances;
    std::map<uint64_t, std::vector<ReleaseRecord>> released;  // by target height
    std::vector<FailedRelease> failed;
    uint64_t total_supply = 0;

    using KeyLookup = std::function<std::optional<HeightKeys>(uint64_t height)>;

    // Applies balance moves and releases every timelock blob whose key is
    // now known (this block's own key, or an earlier one via `past_keys`).
    // Throws InvalidBlockError on overspend; the ledger is left untouched in
    // that case. Decryption failures never abort the block.
    void apply(const Block& block, const HeightKeys& own, const GenesisConfig& cfg,
               const KeyLookup& past_keys);

    size_t pending_count() const { return pending_.size(); }

private:
    struct PendingBlob {
        uint64_t included_at;
        Hash32 txid;
        std::vector<uint8_t> blob;
    };
    std::multimap<uint64_t, PendingBlob> pending_;

    void release_blob(uint64_t target, uint64_t at_height, const Hash32& txid,
                      std::span<const uint8_t> blob, const HeightKeys& keys);
};

struct SubmitResult {
    bool accepted = false;
    bool duplicate = false;
    bool orphaned = false;      // parent unknown; held for later
    bool tip_changed = false;
    uint64_t reorg_depth = 0;   // blocks rolled back when the tip moved
    std::string reason;
    Hash32 hash{};
};

struct LoadReport {
    size_t records = 0;
    size_t accepted = 0;
    size_t rejected = 0;
    size_t orphaned = 0;
    bool truncated = false;
    uint64_t valid_bytes = 0;   // offset of the last complete record
    std::vector<std::string> reject_reasons;
};

// The block tree plus the canonical-branch view. Single writer; concurrent
// reads are safe between mutations.
class ChainState {
public:
    explicit ChainState(GenesisConfig cfg);

    const GenesisConfig& config() const { return cfg_; }

    Hash32 tip() const { return best_; }
    uint64_t height() const;
    const Ledger& ledger() const { return canonical_ledger_; }

    struct BlockRecord {
        Block block;
        Hash32 hash{};
        Hash32 parent{};
        uint64_t height = 0;
        unsigned bits = 0;      // key bits at this height on this branch
        PublicKey key;          // public key for this height on this branch
        PrivateKey sk;          // derived on validation (empty for genesis)
        Work cum_work;
        uint64_t arrival_seq = 0;
    };

    const BlockRecord* find(const Hash32& hash) const;
    const BlockRecord* at_height(uint64_t h) const;  // canonical branch
    std::vector<const BlockRecord*> canonical() const { return canonical_; }
    size_t block_count() const { return records_.size(); }  // incl. genesis
    uint32_t blocks_at_height(uint64_t h) const;

    // Key for a canonical height; beyond the tip, keys are predictable
    // through the end of the next difficulty epoch (predict_horizon).
    PublicKey key_at(uint64_t height) const;
    uint64_t predict_horizon() const;
    BitSchedule schedule() const;

    // Bits for the child of the given parent (epoch-frozen; retargets when
    // the parent closes an epoch).
    unsigned bits_for_child(const BlockRecord& parent) const;

    // Coinbase first (reward + selected fees), then fee-priority selection
    // under the block byte budget. The header's nonce is left unset.
    Block assemble_block(const Mempool& pool, const AccountId& miner,
                         uint64_t timestamp) const;

    // Full validation (linkage, merkle, coinbase, key bits, mining
    // solution, ledger apply on its branch), then fork choice by cumulative
    // work with earliest-arrival tiebreak. Orphans are held and retried when
    // their parent arrives.
    SubmitResult submit_block(const Block& block);

    // Append-only persistence: 4-byte BE length-prefixed block records in
    // arrival order. Load replays through full validation.
    void save(const std::filesystem::path& path) const;
    static std::pair<std::unique_ptr<ChainState>, LoadReport> load(
        const std::filesystem::path& path, GenesisConfig cfg);

private:
    struct HashKey {
        size_t operator()(const Hash32& h) const {
            size_t v;
            std::memcpy(&v, h.data(), sizeof(v));
            return v;
        }
    };

    SubmitResult submit_internal(const Block& block);
    void adopt_tip(const Hash32& new_tip, SubmitResult& result);
    Ledger build_ledger_for(const BlockRecord* head) const;
    std::vector<const BlockRecord*> branch_of(const BlockRecord* head) const;
    Ledger::KeyLookup key_lookup_for(const std::vector<const BlockRecord*>& branch) const;

    GenesisConfig cfg_;
    std::unordered_map<Hash32, std::unique_ptr<BlockRecord>, HashKey> records_;
    std::vector<const BlockRecord*> arrival_order_;  // excl. genesis
    std::multimap<Hash32, Block> orphans_;
    Hash32 genesis_hash_{};
    Hash32 best_{};
    uint64_t next_arrival_ = 1;

    std::vector<const BlockRecord*> canonical_;  // index == height
    Ledger canonical_ledger_;
};

// Deterministic account id for human-readable names: sha256(name).
AccountId account_from_name(std::string_view name);

}  // namespace trb
