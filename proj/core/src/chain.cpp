#include "trb/chain.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "trb/errors.hpp"
#include "trb/modmath.hpp"
#include "trb/trencrypt.hpp"

namespace trb {

std::vector<uint8_t> serialize_block(const Block& block) {
    ByteWriter w;
    w.bytes(serialize_header(block.header));
    if (block.txs.size() > 0xffffffffull) throw Error("too many transactions");
    w.be32(static_cast<uint32_t>(block.txs.size()));
    for (const auto& tx : block.txs) w.bytes(serialize_tx(tx));
    w.bytes(encode_solution(block.solution));
    return w.take();
}

Block deserialize_block(ByteReader& r) {
    Block b;
    b.header = deserialize_header(r);
    uint32_t count = r.be32();
    if (count > (1u << 24)) throw ParseError("implausible transaction count");
    b.txs.reserve(count);
    for (uint32_t i = 0; i < count; ++i) b.txs.push_back(deserialize_tx(r));
    b.solution = decode_solution(r);
    return b;
}

Work Work::block_weight(unsigned bits) {
    Work w;
    if (bits % 2 == 0) {
        w.a = BigUint(1) << (bits / 2);
    } else {
        w.b = BigUint(1) << (bits / 2);  // value is 2^((bits-1)/2) * sqrt(2)
    }
    return w;
}

bool Work::operator<(const Work& o) const {
    if (a == o.a && b == o.b) return false;
    if (a <= o.a && b <= o.b) return true;
    if (o.a <= a && o.b <= b) return false;
    if (a < o.a) {
        // this < other  <=>  (b - o.b) * sqrt(2) < (o.a - a)
        BigUint lhs = b - o.b;
        BigUint rhs = o.a - a;
        return BigUint(2) * lhs * lhs < rhs * rhs;
    }
    // this < other  <=>  (a - o.a) < (o.b - b) * sqrt(2)
    BigUint lhs = a - o.a;
    BigUint rhs = o.b - b;
    return lhs * lhs < BigUint(2) * rhs * rhs;
}

double Work::to_double() const {
    return std::strtod(a.to_string().c_str(), nullptr) +
           std::strtod(b.to_string().c_str(), nullptr) * 1.4142135623730951;
}

void Mempool::add(Transaction tx) {
    Entry e{std::move(tx), next_seq_++, 0};
    e.bytes = e.tx.serialized_size();
    entries_.push_back(std::move(e));
}

std::vector<Transaction> Mempool::select(size_t max_bytes) const {
    std::vector<const Entry*> order;
    order.reserve(entries_.size());
    for (const auto& e : entries_) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(), [](const Entry* x, const Entry* y) {
        // fee per byte descending, compared exactly by cross multiplication
        __uint128_t lhs = static_cast<__uint128_t>(x->tx.fee) * y->bytes;
        __uint128_t rhs = static_cast<__uint128_t>(y->tx.fee) * x->bytes;
        if (lhs != rhs) return lhs > rhs;
        return x->seq < y->seq;  // FIFO tiebreak
    });
    std::vector<Transaction> out;
    size_t used = 0;
    for (const Entry* e : order) {
        if (used + e->bytes > max_bytes) continue;
        used += e->bytes;
        out.push_back(e->tx);
    }
    return out;
}

void Mempool::remove_included(std::span<const Transaction> txs) {
    std::vector<Hash32> gone;
    gone.reserve(txs.size());
    for (const auto& tx : txs) gone.push_back(tx_hash(tx));
    std::erase_if(entries_, [&](const Entry& e) {
        Hash32 h = tx_hash(e.tx);
        return std::find(gone.begin(), gone.end(), h) != gone.end();
    });
}

void Ledger::release_blob(uint64_t target, uint64_t at_height, const Hash32& txid,
                          std::span<const uint8_t> blob, const HeightKeys& keys) {
    try {
        Ciphertext ct = decode_ciphertext(blob);
        auto plaintext = decrypt(keys.sk, keys.pk, ct);
        released[target].push_back(ReleaseRecord{target, at_height, std::move(plaintext)});
    } catch (const Error& e) {
        failed.push_back(FailedRelease{target, at_height, txid, e.what()});
    }
}

void Ledger::apply(const Block& block, const HeightKeys& own, const GenesisConfig& cfg,
                   const KeyLookup& past_keys) {
    const uint64_t height = block.header.height;

    // Balance moves run on a scratch copy so an overspend rejects the whole
    // block without touching the ledger.
    auto scratch = balances;
    auto debit = [&](const AccountId& who, uint64_t amount) {
        auto it = scratch.find(who);
        uint64_t have = it == scratch.end() ? 0 : it->second;
        if (have < amount) {
            throw InvalidBlockError("overspend: account balance " + std::to_string(have) +
                                    " below " + std::to_string(amount));
        }
        scratch[who] = have - amount;
    };
    auto credit = [&](const AccountId& who, uint64_t amount) { scratch[who] += amount; };

    for (const auto& tx : block.txs) {
        switch (tx.kind) {
            case TxKind::Coinbase:
                credit(tx.to, tx.amount);
                break;
            case TxKind::Transfer:
            case TxKind::Timelock:
                debit(tx.from, tx.amount + tx.fee);
                credit(tx.to, tx.amount);
                // the fee itself was minted into the coinbase output
                break;
        }
    }

    balances = std::move(scratch);
    total_supply += cfg.block_reward;

    // Release every timelock blob whose key is now known. Blobs aimed at a
    // future height wait in pending_ until that height's block is applied.
    for (const auto& tx : block.txs) {
        if (tx.kind != TxKind::Timelock) continue;
        Hash32 id = tx_hash(tx);
        uint64_t target;
        try {
            target = decode_ciphertext(tx.metadata).target_height;
        } catch (const Error& e) {
            failed.push_back(FailedRelease{0, height, id, e.what()});
            continue;
        }
        if (target == height) {
            release_blob(target, height, id, tx.metadata, own);
        } else if (target < height) {
            if (auto keys = past_keys(target)) {
                release_blob(target, height, id, tx.metadata, *keys);
            } else {
                failed.push_back(
                    FailedRelease{target, height, id, "no key known for past height"});
            }
        } else {
            pending_.emplace(target, PendingBlob{height, id, tx.metadata});
        }
    }

    // Blobs from earlier blocks that were waiting for exactly this height.
    auto [lo, hi] = pending_.equal_range(height);
    for (auto it = lo; it != hi; ++it) {
        release_blob(height, height, it->second.txid, it->second.blob, own);
    }
    pending_.erase(lo, hi);
}

AccountId account_from_name(std::string_view name) {
    return sha256(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(name.data()),
                                           name.size()));
}

ChainState::ChainState(GenesisConfig cfg) : cfg_(std::move(cfg)) {
    auto rec = std::make_unique<BlockRecord>();
    rec->block.header.version = cfg_.version;
    rec->block.header.timestamp = cfg_.genesis_timestamp;
    rec->block.header.height = 0;
    rec->block.header.key_bits = static_cast<uint16_t>(cfg_.initial_bits);
    rec->height = 0;
    rec->bits = cfg_.initial_bits;
    rec->key = genesis_key(cfg_.seed, cfg_.initial_bits);
    rec->cum_work = Work::zero();
    rec->arrival_seq = 0;
    rec->hash = header_hash(rec->block.header);

    genesis_hash_ = rec->hash;
    best_ = rec->hash;
    canonical_ = {rec.get()};
    records_.emplace(rec->hash, std::move(rec));
}

uint64_t ChainState::height() const { return canonical_.back()->height; }

const ChainState::BlockRecord* ChainState::find(const Hash32& hash) const {
    auto it = records_.find(hash);
    return it == records_.end() ? nullptr : it->second.get();
}

const ChainState::BlockRecord* ChainState::at_height(uint64_t h) const {
    if (h >= canonical_.size()) return nullptr;
    return canonical_[h];
}

uint32_t ChainState::blocks_at_height(uint64_t h) const {
    uint32_t count = 0;
    for (const auto& [hash, rec] : records_) {
        if (rec->height == h) ++count;
    }
    return count;
}

unsigned ChainState::bits_for_child(const BlockRecord& parent) const {
    const uint32_t window = cfg_.retarget_window;
    if (parent.height == 0 || parent.height % window != 0) return parent.bits;

    // The parent closed an epoch: retarget over the last `window` intervals
    // of its own branch.
    std::vector<uint64_t> intervals(window);
    const BlockRecord* cur = &parent;
    for (uint32_t i = 0; i < window; ++i) {
        const BlockRecord* prev = find(cur->parent);
        if (prev == nullptr) throw Error("broken parent chain while retargeting");
        uint64_t t1 = cur->block.header.timestamp;
        uint64_t t0 = prev->block.header.timestamp;
        intervals[window - 1 - i] = t1 > t0 ? t1 - t0 : 0;
        cur = prev;
    }
    return retarget(intervals, cfg_.target_block_time, parent.bits);
}

uint64_t ChainState::predict_horizon() const {
    uint64_t h = height();
    uint64_t boundary = (h / cfg_.retarget_window) * cfg_.retarget_window;
    return boundary + cfg_.retarget_window;
}

BitSchedule ChainState::schedule() const {
    BitSchedule s;
    s.append(0, cfg_.initial_bits);
    unsigned last_bits = cfg_.initial_bits;
    for (uint64_t h = 1; h < canonical_.size(); ++h) {
        unsigned b = canonical_[h]->bits;
        if (b != last_bits) {
            s.append(h, b);
            last_bits = b;
        }
    }
    // bits for the epoch ahead of the tip (known once the boundary block
    // exists)
    const BlockRecord* tip_rec = canonical_.back();
    unsigned next_bits = bits_for_child(*tip_rec);
    if (next_bits != last_bits) s.append(tip_rec->height + 1, next_bits);
    return s;
}

PublicKey ChainState::key_at(uint64_t h) const {
    if (h < canonical_.size()) return canonical_[h]->key;
    if (h > predict_horizon()) {
        throw Error("height " + std::to_string(h) +
                    " is beyond the predictable key horizon " +
                    std::to_string(predict_horizon()));
    }
    const BlockRecord* tip_rec = canonical_.back();
    PublicKey key = tip_rec->key;
    const BlockRecord* walk = tip_rec;
    unsigned bits = walk->bits;
    for (uint64_t hh = tip_rec->height + 1; hh <= h; ++hh) {
        // bits change only across the boundary following the tip
        bits = (hh == tip_rec->height + 1) ? bits_for_child(*tip_rec) : bits;
        key = next_public_key(key, bits);
    }
    return key;
}

Block ChainState::assemble_block(const Mempool& pool, const AccountId& miner,
                                 uint64_t timestamp) const {
    const BlockRecord* tip_rec = canonical_.back();

    Block block;
    Transaction coinbase = make_coinbase(miner, 0);
    size_t budget = cfg_.max_block_bytes;
    size_t coinbase_bytes = coinbase.serialized_size();
    budget = budget > coinbase_bytes ? budget - coinbase_bytes : 0;

    auto selected = pool.select(budget);
    uint64_t fees = 0;
    for (const auto& tx : selected) fees += tx.fee;
    coinbase.amount = cfg_.block_reward + fees;

    block.txs.push_back(std::move(coinbase));
    for (auto& tx : selected) block.txs.push_back(std::move(tx));

    block.header.version = cfg_.version;
    block.header.prev_hash = tip_rec->hash;
    block.header.merkle_root = merkle_root(block.txs);
    block.header.timestamp = timestamp;
    block.header.height = tip_rec->height + 1;
    block.header.key_bits = static_cast<uint16_t>(bits_for_child(*tip_rec));
    return block;
}

std::vector<const ChainState::BlockRecord*> ChainState::branch_of(
    const BlockRecord* head) const {
    std::vector<const BlockRecord*> branch;
    for (const BlockRecord* cur = head; cur != nullptr; cur = find(cur->parent)) {
        branch.push_back(cur);
        if (cur->height == 0) break;
    }
    std::reverse(branch.begin(), branch.end());
    return branch;
}

Ledger::KeyLookup ChainState::key_lookup_for(
    const std::vector<const BlockRecord*>& branch) const {
    return [branch](uint64_t h) -> std::optional<HeightKeys> {
        if (h == 0 || h >= branch.size()) return std::nullopt;
        return HeightKeys{branch[h]->key, branch[h]->sk};
    };
}

Ledger ChainState::build_ledger_for(const BlockRecord* head) const {
    auto branch = branch_of(head);
    Ledger ledger;
    auto lookup = key_lookup_for(branch);
    for (size_t h = 1; h < branch.size(); ++h) {
        ledger.apply(branch[h]->block, HeightKeys{branch[h]->key, branch[h]->sk}, cfg_,
                     lookup);
    }
    return ledger;
}

SubmitResult ChainState::submit_internal(const Block& block) {
    SubmitResult res;
    res.hash = header_hash(block.header);

    if (records_.contains(res.hash)) {
        res.duplicate = true;
        res.reason = "duplicate block";
        return res;
    }

    const BlockRecord* parent = find(block.header.prev_hash);
    if (parent == nullptr) {
        res.orphaned = true;
        res.reason = "unknown parent";
        return res;
    }

    auto reject = [&res](const std::string& why) {
        res.reason = why;
        return res;
    };

    if (block.header.height != parent->height + 1) {
        return reject("height does not extend its parent");
    }

    unsigned expect_bits = bits_for_child(*parent);
    if (block.header.key_bits != expect_bits) {
        return reject("key_bits mismatch: expected " + std::to_string(expect_bits));
    }

    if (block.txs.empty()) return reject("block has no transactions");
    if (block.txs.front().kind != TxKind::Coinbase) {
        return reject("first transaction must be the coinbase");
    }
    uint64_t fees = 0;
    size_t total_bytes = block.txs.front().serialized_size();
    for (size_t i = 1; i < block.txs.size(); ++i) {
        const auto& tx = block.txs[i];
        if (tx.kind == TxKind::Coinbase) return reject("multiple coinbase transactions");
        if (tx.kind == TxKind::Timelock) {
            try {
                decode_ciphertext(tx.metadata);
            } catch (const Error&) {
                return reject("timelock metadata does not parse as a ciphertext");
            }
        }
        fees += tx.fee;
        total_bytes += tx.serialized_size();
    }
    if (block.txs.front().fee != 0) return reject("coinbase cannot pay a fee");
    if (block.txs.front().amount != cfg_.block_reward + fees) {
        return reject("coinbase amount must be reward plus fees");
    }
    if (total_bytes > cfg_.max_block_bytes) return reject("block exceeds the byte limit");

    if (block.header.merkle_root != merkle_root(block.txs)) {
        return reject("merkle root mismatch");
    }

    if (block.header.nonce != block.solution.nonce) {
        return reject("header nonce differs from the solution nonce");
    }

    // This height's key on this branch, then the solution check.
    PublicKey key = next_public_key(parent->key, expect_bits);
    PrivateKey sk;
    try {
        sk = validate(block.header, block.solution, key);
    } catch (const InvalidSolutionError& e) {
        return reject(std::string("invalid solution: ") + e.what());
    }

    // Ledger rules on this branch (overspend rejects the block).
    auto rec = std::make_unique<BlockRecord>();
    rec->block = block;
    rec->hash = res.hash;
    rec->parent = parent->hash;
    rec->height = block.header.height;
    rec->bits = expect_bits;
    rec->key = std::move(key);
    rec->sk = std::move(sk);
    rec->cum_work = parent->cum_work + Work::block_weight(expect_bits);
    rec->arrival_seq = next_arrival_;

    bool extends_tip = parent->hash == best_;
    Ledger candidate;
    if (extends_tip) {
        candidate = canonical_ledger_;
        auto branch = canonical_;
        branch.push_back(rec.get());
        try {
            candidate.apply(rec->block, HeightKeys{rec->key, rec->sk}, cfg_,
                            key_lookup_for(branch));
        } catch (const InvalidBlockError& e) {
            return reject(e.what());
        }
    } else {
        try {
            Ledger base = build_ledger_for(parent);
            auto branch = branch_of(parent);
            branch.push_back(rec.get());
            base.apply(rec->block, HeightKeys{rec->key, rec->sk}, cfg_,
                       key_lookup_for(branch));
            candidate = std::move(base);
        } catch (const InvalidBlockError& e) {
            return reject(e.what());
        }
    }

    const BlockRecord* inserted = rec.get();
    records_.emplace(res.hash, std::move(rec));
    arrival_order_.push_back(inserted);
    ++next_arrival_;
    res.accepted = true;

    // Fork choice: strictly more cumulative work wins; ties keep the
    // earlier-arrived tip.
    const BlockRecord* best = find(best_);
    if (best->cum_work < inserted->cum_work) {
        uint64_t old_height = best->height;
        // depth of the rollback: how many old-canonical blocks leave the
        // canonical chain
        uint64_t lca_height = 0;
        {
            const BlockRecord* a = best;
            const BlockRecord* b = inserted;
            while (b->height > a->height) b = find(b->parent);
            while (a->height > b->height) a = find(a->parent);
            while (a != b) {
                a = find(a->parent);
                b = find(b->parent);
            }
            lca_height = a->height;
        }
        res.tip_changed = true;
        res.reorg_depth = old_height - lca_height;

        best_ = inserted->hash;
        canonical_ = branch_of(inserted);
        canonical_ledger_ = std::move(candidate);  // branch ledger of the new tip
    }
    return res;
}

SubmitResult ChainState::submit_block(const Block& block) {
    SubmitResult res = submit_internal(block);
    if (res.orphaned) {
        // Hold for the parent, unless an identical orphan is already queued.
        auto [lo, hi] = orphans_.equal_range(block.header.prev_hash);
        Hash32 h = res.hash;
        bool known = std::any_of(lo, hi, [&](const auto& kv) {
            return header_hash(kv.second.header) == h;
        });
        if (!known) orphans_.emplace(block.header.prev_hash, block);
        return res;
    }
    if (!res.accepted) return res;

    // Cascade any orphans that were waiting on blocks we just accepted.
    std::vector<Hash32> ready{res.hash};
    while (!ready.empty()) {
        Hash32 parent = ready.back();
        ready.pop_back();
        auto [lo, hi] = orphans_.equal_range(parent);
        std::vector<Block> waiting;
        for (auto it = lo; it != hi; ++it) waiting.push_back(std::move(it->second));
        orphans_.erase(lo, hi);
        for (auto& b : waiting) {
            SubmitResult r = submit_internal(b);
            if (r.accepted) {
                ready.push_back(r.hash);
                res.tip_changed |= r.tip_changed;
                res.reorg_depth = std::max(res.reorg_depth, r.reorg_depth);
            }
        }
    }
    return res;
}

void ChainState::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write chain file: " + path.string());
    for (const BlockRecord* rec : arrival_order_) {
        auto bytes = serialize_block(rec->block);
        uint8_t len[4] = {static_cast<uint8_t>(bytes.size() >> 24),
                          static_cast<uint8_t>(bytes.size() >> 16),
                          static_cast<uint8_t>(bytes.size() >> 8),
                          static_cast<uint8_t>(bytes.size())};
        out.write(reinterpret_cast<const char*>(len), 4);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
}

std::pair<std::unique_ptr<ChainState>, LoadReport> ChainState::load(
    const std::filesystem::path& path, GenesisConfig cfg) {
    auto chain = std::make_unique<ChainState>(std::move(cfg));
    LoadReport report;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open chain file: " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());

    size_t pos = 0;
    while (pos < data.size()) {
        if (data.size() - pos < 4) {
            report.truncated = true;
            break;
        }
        uint32_t len = static_cast<uint32_t>(data[pos]) << 24 |
                       static_cast<uint32_t>(data[pos + 1]) << 16 |
                       static_cast<uint32_t>(data[pos + 2]) << 8 |
                       static_cast<uint32_t>(data[pos + 3]);
        if (data.size() - pos - 4 < len) {
            report.truncated = true;
            break;
        }
        ++report.records;
        std::span<const uint8_t> record(data.data() + pos + 4, len);
        pos += 4 + static_cast<size_t>(len);
        report.valid_bytes = pos;
        try {
            ByteReader r(record);
            Block block = deserialize_block(r);
            SubmitResult res = chain->submit_block(block);
            if (res.accepted) {
                ++report.accepted;
            } else if (res.orphaned) {
                ++report.orphaned;
                report.reject_reasons.push_back(res.reason);
            } else if (!res.duplicate) {
                ++report.rejected;
                report.reject_reasons.push_back(res.reason);
            }
        } catch (const Error& e) {
            ++report.rejected;
            report.reject_reasons.push_back(e.what());
        }
    }
    return {std::move(chain), report};
}

}  // namespace trb
