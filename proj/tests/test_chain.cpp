#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <numeric>

#include "trb/chain.hpp"
#include "trb/errors.hpp"
#include "trb/modmath.hpp"
#include "trb/netsim.hpp"
#include "trb/trencrypt.hpp"

using namespace trb;

namespace {

GenesisConfig test_genesis(unsigned bits = 12, uint32_t window = 5) {
    GenesisConfig cfg;
    cfg.seed = BigUint(987654);
    cfg.initial_bits = bits;
    cfg.target_block_time = 60;
    cfg.retarget_window = window;
    cfg.block_reward = 50;
    cfg.genesis_timestamp = 1000;
    return cfg;
}

// Mines and appends one block on the current tip.
Block mine_next(ChainState& chain, const Mempool& pool, const AccountId& miner,
                uint64_t timestamp, DetRng& rng) {
    Block block = chain.assemble_block(pool, miner, timestamp);
    PublicKey pk = chain.key_at(block.header.height);
    MineResult mined = mine_rolling(block.header, pk, rng);
    block.solution = mined.solution;
    block.header.nonce = mined.solution.nonce;
    return block;
}

void extend(ChainState& chain, const AccountId& miner, int blocks, DetRng& rng,
            Mempool* pool = nullptr) {
    Mempool empty;
    for (int i = 0; i < blocks; ++i) {
        Mempool& use = pool ? *pool : empty;
        uint64_t ts = chain.at_height(chain.height())->block.header.timestamp +
                      chain.config().target_block_time;
        Block b = mine_next(chain, use, miner, ts, rng);
        SubmitResult res = chain.submit_block(b);
        REQUIRE(res.accepted);
        if (pool) pool->remove_included(b.txs);
    }
}

Transaction transfer(const AccountId& from, const AccountId& to, uint64_t amount,
                     uint64_t fee, uint8_t salt = 0) {
    Transaction tx;
    tx.kind = TxKind::Transfer;
    tx.from = from;
    tx.to = to;
    tx.amount = amount;
    tx.fee = fee;
    tx.signature[0] = salt;  // distinguish otherwise-identical transactions
    return tx;
}

// Reference greedy selection, reimplemented independently of Mempool.
std::vector<size_t> greedy_reference(const std::vector<Transaction>& txs, size_t budget) {
    std::vector<size_t> idx(txs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        double da = static_cast<double>(txs[a].fee) / txs[a].serialized_size();
        double db = static_cast<double>(txs[b].fee) / txs[b].serialized_size();
        if (da != db) return da > db;
        return a < b;
    });
    std::vector<size_t> out;
    size_t used = 0;
    for (size_t i : idx) {
        size_t sz = txs[i].serialized_size();
        if (used + sz > budget) continue;
        used += sz;
        out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("merkle root shapes") {
    AccountId a = account_from_name("a");
    Transaction t1 = make_coinbase(a, 50);
    Transaction t2 = transfer(a, account_from_name("b"), 5, 1);
    Transaction t3 = transfer(a, account_from_name("c"), 6, 2);

    // single transaction: the root is its own hash
    CHECK(merkle_root(std::vector<Transaction>{t1}) == tx_hash(t1));

    // two transactions: double sha of the concatenated hashes
    {
        auto h1 = tx_hash(t1);
        auto h2 = tx_hash(t2);
        std::vector<uint8_t> pair(h1.begin(), h1.end());
        pair.insert(pair.end(), h2.begin(), h2.end());
        CHECK(merkle_root(std::vector<Transaction>{t1, t2}) == double_sha256(pair));
    }

    // three transactions equal a four-leaf tree with the third duplicated
    {
        auto h1 = tx_hash(t1);
        auto h2 = tx_hash(t2);
        auto h3 = tx_hash(t3);
        auto pair_hash = [](const Hash32& l, const Hash32& r) {
            std::vector<uint8_t> buf(l.begin(), l.end());
            buf.insert(buf.end(), r.begin(), r.end());
            return double_sha256(buf);
        };
        Hash32 left = pair_hash(h1, h2);
        Hash32 right = pair_hash(h3, h3);
        CHECK(merkle_root(std::vector<Transaction>{t1, t2, t3}) == pair_hash(left, right));
    }

    CHECK_THROWS_AS(merkle_root(std::vector<Transaction>{}), EmptyBlockError);
}

TEST_CASE("header serialization layout is bit-exact") {
    BlockHeader h;
    h.version = 0x01020304;
    h.prev_hash.fill(0x11);
    h.merkle_root.fill(0x22);
    h.timestamp = 0x0102030405060708ull;
    h.height = 0x1122334455667788ull;
    h.key_bits = 0x0a0b;
    h.nonce = BigUint::from_hex("c0ffee");

    auto bytes = serialize_header(h);
    REQUIRE(bytes.size() == 4 + 32 + 32 + 8 + 8 + 2 + 2 + 3);
    CHECK(bytes[0] == 0x01);
    CHECK(bytes[3] == 0x04);
    CHECK(bytes[4] == 0x11);
    CHECK(bytes[35] == 0x11);
    CHECK(bytes[36] == 0x22);
    CHECK(bytes[68] == 0x01);
    CHECK(bytes[75] == 0x08);
    CHECK(bytes[76] == 0x11);
    CHECK(bytes[84] == 0x0a);
    CHECK(bytes[85] == 0x0b);
    CHECK(bytes[86] == 0x00);
    CHECK(bytes[87] == 0x03);  // nonce length
    CHECK(bytes[88] == 0xc0);
    CHECK(bytes[90] == 0xee);

    ByteReader r(bytes);
    BlockHeader back = deserialize_header(r);
    CHECK(back == h);

    BlockHeader big = h;
    big.nonce = BigUint(1) << 4096;
    CHECK_THROWS_AS(serialize_header(big), NonceTooLargeError);

    // padded nonce encodings are not canonical
    std::vector<uint8_t> padded(bytes.begin(), bytes.end());
    padded[87] = 0x04;  // claim 4 nonce bytes
    padded.insert(padded.begin() + 88, 0x00);
    ByteReader rp(padded);
    CHECK_THROWS_AS(deserialize_header(rp), ParseError);
}

TEST_CASE("transaction round trip and validation") {
    Transaction tx = transfer(account_from_name("x"), account_from_name("y"), 12, 3);
    tx.metadata = {1, 2, 3};
    auto bytes = serialize_tx(tx);
    CHECK(bytes.size() == tx.serialized_size());
    ByteReader r(bytes);
    CHECK(deserialize_tx(r) == tx);

    bytes[0] = 9;  // unknown kind
    ByteReader r2(bytes);
    CHECK_THROWS_AS(deserialize_tx(r2), ParseError);
}

TEST_CASE("mempool prefers higher fee per byte") {
    AccountId a = account_from_name("a");
    AccountId b = account_from_name("b");
    Mempool pool;
    Transaction cheap = transfer(a, b, 1, 5, 1);
    Transaction rich = transfer(a, b, 1, 9, 2);
    pool.add(cheap);
    pool.add(rich);

    size_t one_tx = cheap.serialized_size();
    auto picked = pool.select(one_tx);
    REQUIRE(picked.size() == 1);
    CHECK(picked[0].fee == 9);

    // FIFO on exact ties
    Mempool tie;
    Transaction first = transfer(a, b, 1, 7, 3);
    Transaction second = transfer(a, b, 1, 7, 4);
    tie.add(first);
    tie.add(second);
    auto both = tie.select(one_tx);
    REQUIRE(both.size() == 1);
    CHECK(both[0] == first);
}

TEST_CASE("mempool selection matches an independent greedy oracle") {
    DetRng rng{42u};
    for (int instance = 0; instance < 300; ++instance) {
        size_t count = 1 + rng.below(12).to_u64();
        std::vector<Transaction> txs;
        for (size_t i = 0; i < count; ++i) {
            Transaction tx = transfer(account_from_name("u"), account_from_name("v"),
                                      1, rng.below(100).to_u64(),
                                      static_cast<uint8_t>(i));
            tx.metadata.resize(rng.below(200).to_u64());
            txs.push_back(std::move(tx));
        }
        size_t budget = 100 + rng.below(2000).to_u64();

        Mempool pool;
        for (const auto& tx : txs) pool.add(tx);
        auto got = pool.select(budget);

        auto want_idx = greedy_reference(txs, budget);
        std::vector<Transaction> want;
        for (size_t i : want_idx) want.push_back(txs[i]);

        // same multiset independent of order
        REQUIRE(got.size() == want.size());
        uint64_t got_fees = 0, want_fees = 0;
        size_t got_bytes = 0;
        for (const auto& tx : got) {
            got_fees += tx.fee;
            got_bytes += tx.serialized_size();
        }
        for (const auto& tx : want) want_fees += tx.fee;
        CHECK(got_fees == want_fees);
        CHECK(got_bytes <= budget);

        // priority property: an unselected transaction may only be skipped
        // because it did not fit when its turn came
        for (const auto& tx : txs) {
            bool selected = std::find(got.begin(), got.end(), tx) != got.end();
            if (selected) continue;
            size_t ahead = 0;
            __uint128_t d_tx = static_cast<__uint128_t>(tx.fee) *
                               1;  // compare via cross-multiplication below
            for (const auto& other : got) {
                __uint128_t lhs = static_cast<__uint128_t>(other.fee) *
                                  tx.serialized_size();
                __uint128_t rhs = static_cast<__uint128_t>(tx.fee) *
                                  other.serialized_size();
                if (lhs >= rhs) ahead += other.serialized_size();
            }
            (void)d_tx;
            // everything at least as dense that was taken, plus this one,
            // must overflow the budget
            CHECK(ahead + tx.serialized_size() > budget);
        }
    }
}

TEST_CASE("assemble_block shapes") {
    ChainState chain(test_genesis());
    AccountId miner = account_from_name("miner");
    Mempool empty;
    Block b = chain.assemble_block(empty, miner, 2000);
    REQUIRE(b.txs.size() == 1);
    CHECK(b.txs[0].kind == TxKind::Coinbase);
    CHECK(b.txs[0].amount == 50);
    CHECK(b.header.height == 1);
    CHECK(b.header.prev_hash == chain.tip());
    CHECK(b.header.merkle_root == merkle_root(b.txs));
    CHECK(b.header.key_bits == 12);
}

TEST_CASE("coinbase credits the miner and supply is conserved") {
    ChainState chain(test_genesis());
    AccountId miner = account_from_name("miner");
    DetRng rng{1u};
    extend(chain, miner, 5, rng);

    CHECK(chain.height() == 5);
    CHECK(chain.ledger().balances.at(miner) == 5 * 50);

    uint64_t total = 0;
    for (const auto& [acct, bal] : chain.ledger().balances) total += bal;
    CHECK(total == 5 * 50);
    CHECK(chain.ledger().total_supply == 5 * 50);
}

TEST_CASE("transfers move funds and fees go to the including miner") {
    ChainState chain(test_genesis());
    AccountId alice = account_from_name("alice");
    AccountId bob = account_from_name("bob");
    DetRng rng{2u};

    extend(chain, alice, 2, rng);  // alice: 100

    Mempool pool;
    pool.add(transfer(alice, bob, 30, 5));
    uint64_t ts = chain.at_height(2)->block.header.timestamp + 60;
    Block b = mine_next(chain, pool, bob, ts, rng);
    REQUIRE(chain.submit_block(b).accepted);

    // bob mined: reward 50 + fee 5, plus the 30 transferred
    CHECK(chain.ledger().balances.at(bob) == 50 + 5 + 30);
    CHECK(chain.ledger().balances.at(alice) == 100 - 30 - 5);

    uint64_t total = 0;
    for (const auto& [acct, bal] : chain.ledger().balances) total += bal;
    CHECK(total == 3 * 50);
}

TEST_CASE("overspend rejects the whole block") {
    ChainState chain(test_genesis());
    AccountId alice = account_from_name("alice");
    AccountId bob = account_from_name("bob");
    DetRng rng{3u};
    extend(chain, alice, 1, rng);  // alice: 50

    Mempool pool;
    pool.add(transfer(alice, bob, 49, 5));  // 54 > 50
    uint64_t ts = chain.at_height(1)->block.header.timestamp + 60;
    Block b = mine_next(chain, pool, bob, ts, rng);
    SubmitResult res = chain.submit_block(b);
    CHECK_FALSE(res.accepted);
    CHECK(res.reason.find("overspend") != std::string::npos);
    CHECK(chain.height() == 1);
    CHECK(chain.ledger().balances.at(alice) == 50);
}

TEST_CASE("timelock blob releases at its target height") {
    ChainState chain(test_genesis());
    AccountId miner = account_from_name("m");
    DetRng rng{4u};

    // encrypt to height 3, include it in block 1, mine through height 3
    PublicKey pk3 = chain.key_at(3);
    std::vector<uint8_t> secret = {'t', 'o', 'p', ' ', 's', 'e', 'c', 'r', 'e', 't'};
    Ciphertext ct = encrypt(pk3, 3, secret, rng);

    Transaction tx;
    tx.kind = TxKind::Timelock;
    tx.metadata = encode_ciphertext(ct);
    Mempool pool;
    pool.add(tx);

    uint64_t ts = 1000;
    Block b1 = mine_next(chain, pool, miner, ts += 60, rng);
    REQUIRE(chain.submit_block(b1).accepted);
    pool.remove_included(b1.txs);
    CHECK(pool.empty());
    CHECK(chain.ledger().released.empty());  // not yet decryptable

    extend(chain, miner, 1, rng);  // height 2
    CHECK(chain.ledger().released.empty());

    extend(chain, miner, 1, rng);  // height 3: key revealed
    const auto& released = chain.ledger().released;
    REQUIRE(released.count(3) == 1);
    REQUIRE(released.at(3).size() == 1);
    CHECK(released.at(3)[0].plaintext == secret);
    CHECK(released.at(3)[0].released_at == 3);
}

TEST_CASE("blob aimed at an already-mined height releases on inclusion") {
    ChainState chain(test_genesis());
    AccountId miner = account_from_name("m");
    DetRng rng{5u};
    extend(chain, miner, 2, rng);

    PublicKey pk1 = chain.key_at(1);
    std::vector<uint8_t> msg = {9, 9, 9};
    Ciphertext ct = encrypt(pk1, 1, msg, rng);
    Transaction tx;
    tx.kind = TxKind::Timelock;
    tx.metadata = encode_ciphertext(ct);
    Mempool pool;
    pool.add(tx);
    uint64_t ts = chain.at_height(2)->block.header.timestamp + 60;
    Block b = mine_next(chain, pool, miner, ts, rng);
    REQUIRE(chain.submit_block(b).accepted);

    REQUIRE(chain.ledger().released.count(1) == 1);
    CHECK(chain.ledger().released.at(1)[0].plaintext == msg);
    CHECK(chain.ledger().released.at(1)[0].released_at == 3);  // late by two
}

TEST_CASE("corrupted timelock blob is recorded, block still applies") {
    ChainState chain(test_genesis());
    AccountId miner = account_from_name("m");
    DetRng rng{6u};

    PublicKey pk1 = chain.key_at(1);
    Ciphertext ct = encrypt(pk1, 1, std::vector<uint8_t>{1, 2, 3}, rng);
    ct.tag[0] ^= 0xff;  // breaks integrity
    Transaction tx;
    tx.kind = TxKind::Timelock;
    tx.metadata = encode_ciphertext(ct);
    Mempool pool;
    pool.add(tx);

    Block b = mine_next(chain, pool, miner, 2000, rng);
    REQUIRE(chain.submit_block(b).accepted);
    CHECK(chain.height() == 1);
    CHECK(chain.ledger().released.empty());
    REQUIRE(chain.ledger().failed.size() == 1);
    CHECK(chain.ledger().failed[0].target_height == 1);
}

TEST_CASE("unparseable timelock metadata rejects the block") {
    ChainState chain(test_genesis());
    AccountId miner = account_from_name("m");
    DetRng rng{7u};

    Transaction tx;
    tx.kind = TxKind::Timelock;
    tx.metadata = {0x01, 0x02};  // far too short
    Mempool pool;
    pool.add(tx);
    Block b = mine_next(chain, pool, miner, 2000, rng);
    SubmitResult res = chain.submit_block(b);
    CHECK_FALSE(res.accepted);
    CHECK(res.reason.find("ciphertext") != std::string::npos);
}

TEST_CASE("work ordering is exact for even and odd bit counts") {
    CHECK(Work::block_weight(16) < Work::block_weight(18));
    CHECK(Work::block_weight(15) < Work::block_weight(16));
    CHECK(Work::block_weight(14) < Work::block_weight(15));  // 2^7 < 2^7*sqrt2

    // 3*sqrt(2) > 4, pure-integer comparison
    Work lhs{4, 0};
    Work rhs{0, 3};
    CHECK(lhs < rhs);
    CHECK_FALSE(rhs < lhs);

    // equal-length chains at bits 16 vs 18
    Work w16 = Work::zero(), w18 = Work::zero();
    for (int i = 0; i < 7; ++i) {
        w16 = w16 + Work::block_weight(16);
        w18 = w18 + Work::block_weight(18);
    }
    CHECK(w16 < w18);
    // chain weight of an L-block uniform chain is L * 2^(bits/2)
    CHECK(w16.a == BigUint(7) * (BigUint(1) << 8));
    CHECK(w16.b == BigUint(0));
}

TEST_CASE("fork choice keeps the first-seen tip on equal work") {
    ChainState chain(test_genesis());
    AccountId a = account_from_name("a");
    AccountId b = account_from_name("b");
    DetRng rng{8u};

    Mempool empty;
    Block first = mine_next(chain, empty, a, 2000, rng);
    Block second = mine_next(chain, empty, b, 2001, rng);  // same parent
    REQUIRE(chain.submit_block(first).accepted);
    Hash32 tip_after_first = chain.tip();
    SubmitResult res = chain.submit_block(second);
    REQUIRE(res.accepted);            // stored as a fork block
    CHECK_FALSE(res.tip_changed);     // equal work, first arrival wins
    CHECK(chain.tip() == tip_after_first);
    CHECK(chain.blocks_at_height(1) == 2);
}

TEST_CASE("heavier branch wins and the ledger reorgs") {
    ChainState chain(test_genesis());
    AccountId a = account_from_name("a");
    AccountId b = account_from_name("b");
    DetRng rng{9u};

    Mempool empty;
    Block b1a = mine_next(chain, empty, a, 2000, rng);
    REQUIRE(chain.submit_block(b1a).accepted);
    CHECK(chain.ledger().balances.at(a) == 50);

    // competing branch: same height block then a child, built on genesis
    ChainState other(test_genesis());
    Block b1b = mine_next(other, empty, b, 2005, rng);
    REQUIRE(other.submit_block(b1b).accepted);
    Block b2b = mine_next(other, empty, b, 2065, rng);

    REQUIRE(chain.submit_block(b1b).accepted);
    CHECK(chain.tip() == header_hash(b1a.header));  // still first branch

    SubmitResult res = chain.submit_block(b2b);
    REQUIRE(res.accepted);
    CHECK(res.tip_changed);
    CHECK(res.reorg_depth == 1);
    CHECK(chain.height() == 2);
    CHECK(chain.tip() == header_hash(b2b.header));

    // ledger reflects the new branch only
    CHECK(chain.ledger().balances.count(a) == 0);
    CHECK(chain.ledger().balances.at(b) == 100);
}

TEST_CASE("out-of-order arrival is held and connected later") {
    ChainState source(test_genesis());
    AccountId m = account_from_name("m");
    DetRng rng{10u};
    extend(source, m, 3, rng);

    ChainState sink(test_genesis());
    const Block& blk1 = source.at_height(1)->block;
    const Block& blk2 = source.at_height(2)->block;
    const Block& blk3 = source.at_height(3)->block;

    SubmitResult r3 = sink.submit_block(blk3);
    CHECK(r3.orphaned);
    SubmitResult r2 = sink.submit_block(blk2);
    CHECK(r2.orphaned);
    SubmitResult r1 = sink.submit_block(blk1);
    CHECK(r1.accepted);
    CHECK(sink.height() == 3);  // orphans cascaded in
    CHECK(sink.tip() == source.tip());
}

TEST_CASE("difficulty retargets at epoch boundaries per branch") {
    // window 5, target 60s; make blocks arrive instantly so bits drop by 2
    GenesisConfig cfg = test_genesis(12, 5);
    ChainState chain(cfg);
    AccountId m = account_from_name("m");
    DetRng rng{11u};

    Mempool empty;
    uint64_t ts = cfg.genesis_timestamp;
    for (int i = 0; i < 5; ++i) {
        ts += 1;  // 1-second intervals, far below target
        Block b = mine_next(chain, empty, m, ts, rng);
        REQUIRE(chain.submit_block(b).accepted);
    }
    CHECK(chain.at_height(5)->bits == 12);

    // the next epoch's bits are already predictable
    CHECK(chain.predict_horizon() == 10);
    BitSchedule sched = chain.schedule();
    CHECK(sched.bits_at(5) == 12);
    CHECK(sched.bits_at(6) == 14);  // too fast: clamped +2

    ts += 1;
    Block b6 = mine_next(chain, empty, m, ts, rng);
    CHECK(b6.header.key_bits == 14);
    REQUIRE(chain.submit_block(b6).accepted);
    CHECK(chain.at_height(6)->bits == 14);

    // a block claiming the wrong bits is rejected
    Block bad = chain.assemble_block(empty, m, ts + 1);
    bad.header.key_bits = 12;
    PublicKey wrong_pk = next_public_key(chain.at_height(6)->key, 12);
    MineResult mined = mine_rolling(bad.header, wrong_pk, rng);
    bad.solution = mined.solution;
    bad.header.nonce = mined.solution.nonce;
    SubmitResult res = chain.submit_block(bad);
    CHECK_FALSE(res.accepted);
    CHECK(res.reason.find("key_bits") != std::string::npos);
}

TEST_CASE("key prediction beyond the horizon is refused") {
    ChainState chain(test_genesis(12, 5));
    CHECK(chain.predict_horizon() == 5);
    CHECK_NOTHROW(chain.key_at(5));
    CHECK_THROWS_AS(chain.key_at(6), Error);
}

TEST_CASE("persistence round trip preserves tip and balances") {
    auto path = std::filesystem::temp_directory_path() / "trb_chain_test.dat";
    GenesisConfig cfg = test_genesis();
    ChainState chain(cfg);
    AccountId m = account_from_name("m");
    DetRng rng{12u};
    extend(chain, m, 8, rng);
    chain.save(path);

    auto [loaded, report] = ChainState::load(path, cfg);
    CHECK(report.accepted == 8);
    CHECK(report.rejected == 0);
    CHECK_FALSE(report.truncated);
    CHECK(loaded->tip() == chain.tip());
    CHECK(loaded->ledger().balances == chain.ledger().balances);
    std::filesystem::remove(path);
}

TEST_CASE("empty chain file loads as genesis only") {
    auto path = std::filesystem::temp_directory_path() / "trb_chain_empty.dat";
    std::ofstream(path).close();
    auto [loaded, report] = ChainState::load(path, test_genesis());
    CHECK(report.records == 0);
    CHECK(loaded->height() == 0);
    std::filesystem::remove(path);
}

TEST_CASE("a flipped byte is detected on replay") {
    auto path = std::filesystem::temp_directory_path() / "trb_chain_flip.dat";
    GenesisConfig cfg = test_genesis();
    ChainState chain(cfg);
    AccountId m = account_from_name("m");
    DetRng rng{13u};
    extend(chain, m, 6, rng);
    chain.save(path);

    // flip one byte inside the third record's header area
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    size_t pos = 0;
    for (int rec = 0; rec < 2; ++rec) {
        uint32_t len = data[pos] << 24 | data[pos + 1] << 16 | data[pos + 2] << 8 |
                       data[pos + 3];
        pos += 4 + len;
    }
    f.seekp(static_cast<std::streamoff>(pos + 4 + 40));  // inside the merkle root
    char byte;
    f.seekg(static_cast<std::streamoff>(pos + 4 + 40));
    f.get(byte);
    f.seekp(static_cast<std::streamoff>(pos + 4 + 40));
    f.put(static_cast<char>(byte ^ 0x01));
    f.close();

    auto [loaded, report] = ChainState::load(path, cfg);
    CHECK(loaded->height() == 2);  // blocks after the corruption are rejected
    CHECK(report.rejected >= 1);
    CHECK(report.orphaned == 6 - 3);
    std::filesystem::remove(path);
}

TEST_CASE("truncated chain file reports the clean byte offset") {
    auto path = std::filesystem::temp_directory_path() / "trb_chain_trunc.dat";
    GenesisConfig cfg = test_genesis();
    ChainState chain(cfg);
    AccountId m = account_from_name("m");
    DetRng rng{14u};
    extend(chain, m, 4, rng);
    chain.save(path);

    auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 7);  // cut into the last record

    auto [loaded, report] = ChainState::load(path, cfg);
    CHECK(report.truncated);
    CHECK(report.accepted == 3);
    CHECK(loaded->height() == 3);
    // the offset points at the end of the last complete record
    auto [reloaded, second] = ChainState::load(path, cfg);
    CHECK(second.valid_bytes == report.valid_bytes);
    CHECK(report.valid_bytes < size - 7);
    std::filesystem::remove(path);
}

TEST_CASE("chain rejects a header nonce that differs from the solution") {
    ChainState chain(test_genesis());
    AccountId m = account_from_name("m");
    DetRng rng{15u};
    Mempool empty;
    Block b = mine_next(chain, empty, m, 2000, rng);
    b.header.nonce = b.header.nonce + 1;
    SubmitResult res = chain.submit_block(b);
    CHECK_FALSE(res.accepted);
}

TEST_CASE("chain rejects wrong coinbase amounts") {
    ChainState chain(test_genesis());
    AccountId m = account_from_name("m");
    DetRng rng{16u};
    Mempool empty;
    Block b = chain.assemble_block(empty, m, 2000);
    b.txs[0].amount = 51;  // not reward + fees
    b.header.merkle_root = merkle_root(b.txs);
    PublicKey pk = chain.key_at(1);
    MineResult mined = mine_rolling(b.header, pk, rng);
    b.solution = mined.solution;
    b.header.nonce = mined.solution.nonce;
    SubmitResult res = chain.submit_block(b);
    CHECK_FALSE(res.accepted);
    CHECK(res.reason.find("coinbase") != std::string::npos);
}

TEST_CASE("released state follows the canonical branch across a reorg") {
    GenesisConfig cfg = test_genesis();
    ChainState chain(cfg);
    AccountId a = account_from_name("a");
    AccountId b = account_from_name("b");
    DetRng rng{20u};

    // branch A: block 1 carries a message targeting height 1
    PublicKey pk1 = chain.key_at(1);
    std::vector<uint8_t> msg = {0x5e, 0xcb, 0x07};
    Transaction tx;
    tx.kind = TxKind::Timelock;
    tx.metadata = encode_ciphertext(encrypt(pk1, 1, msg, rng));
    Mempool pool;
    pool.add(tx);
    Block a1 = mine_next(chain, pool, a, 2000, rng);
    REQUIRE(chain.submit_block(a1).accepted);
    REQUIRE(chain.ledger().released.count(1) == 1);

    // branch B: two empty blocks built independently from the same genesis
    ChainState other(cfg);
    Mempool empty;
    Block b1 = mine_next(other, empty, b, 2005, rng);
    REQUIRE(other.submit_block(b1).accepted);
    Block b2 = mine_next(other, empty, b, 2065, rng);

    REQUIRE(chain.submit_block(b1).accepted);
    SubmitResult res = chain.submit_block(b2);
    REQUIRE(res.accepted);
    REQUIRE(res.tip_changed);

    // the message's containing block fell off the canonical chain, so its
    // release is gone with it
    CHECK(chain.ledger().released.count(1) == 0);

    // re-including the transaction on the winning branch releases it again,
    // late, with height 1's key looked up from the new branch
    Mempool pool2;
    pool2.add(tx);
    uint64_t ts = chain.at_height(2)->block.header.timestamp + 60;
    Block b3 = mine_next(chain, pool2, b, ts, rng);
    REQUIRE(chain.submit_block(b3).accepted);
    REQUIRE(chain.ledger().released.count(1) == 1);
    CHECK(chain.ledger().released.at(1)[0].plaintext == msg);
    CHECK(chain.ledger().released.at(1)[0].released_at == 3);
}

TEST_CASE("persistence preserves fork blocks and the fork choice") {
    auto path = std::filesystem::temp_directory_path() / "trb_chain_forks.dat";
    GenesisConfig cfg = test_genesis();
    ChainState chain(cfg);
    AccountId a = account_from_name("a");
    AccountId b = account_from_name("b");
    DetRng rng{21u};

    // a losing fork at height 1 plus a winning two-block branch
    Mempool empty;
    Block a1 = mine_next(chain, empty, a, 2000, rng);
    REQUIRE(chain.submit_block(a1).accepted);

    ChainState other(cfg);
    Block b1 = mine_next(other, empty, b, 2005, rng);
    REQUIRE(other.submit_block(b1).accepted);
    Block b2 = mine_next(other, empty, b, 2065, rng);
    REQUIRE(chain.submit_block(b1).accepted);
    REQUIRE(chain.submit_block(b2).accepted);
    REQUIRE(chain.height() == 2);
    REQUIRE(chain.block_count() == 4);  // genesis + 3

    chain.save(path);
    auto [loaded, report] = ChainState::load(path, cfg);
    CHECK(report.accepted == 3);
    CHECK(loaded->tip() == chain.tip());
    CHECK(loaded->block_count() == chain.block_count());
    CHECK(loaded->blocks_at_height(1) == 2);
    CHECK(loaded->ledger().balances == chain.ledger().balances);
    std::filesystem::remove(path);
}

TEST_CASE("block delivery order does not matter") {
    GenesisConfig cfg = test_genesis();
    ChainState source(cfg);
    AccountId a = account_from_name("a");
    AccountId b = account_from_name("b");
    DetRng rng{22u};

    // build a tree: 5 blocks on the main branch, a 2-block fork off height 2
    extend(source, a, 5, rng);
    ChainState forker(cfg);
    Mempool empty;
    Block f1 = mine_next(forker, empty, b, 3000, rng);
    REQUIRE(forker.submit_block(f1).accepted);
    Block f2 = mine_next(forker, empty, b, 3060, rng);
    REQUIRE(forker.submit_block(f2).accepted);
    REQUIRE(source.submit_block(f1).accepted);
    REQUIRE(source.submit_block(f2).accepted);

    std::vector<Block> blocks;
    for (uint64_t h = 1; h <= 5; ++h) blocks.push_back(source.at_height(h)->block);
    blocks.push_back(f1);
    blocks.push_back(f2);

    for (int perm = 0; perm < 20; ++perm) {
        // deterministic shuffle
        std::vector<Block> order = blocks;
        for (size_t i = order.size(); i > 1; --i) {
            size_t j = rng.below(BigUint(i)).to_u64();
            std::swap(order[i - 1], order[j]);
        }
        ChainState sink(cfg);
        for (const auto& blk : order) sink.submit_block(blk);
        REQUIRE(sink.tip() == source.tip());
        REQUIRE(sink.height() == source.height());
        REQUIRE(sink.ledger().balances == source.ledger().balances);
        REQUIRE(sink.block_count() == source.block_count());
    }
}

TEST_CASE("chain keys agree with the standalone key chain") {
    GenesisConfig cfg = test_genesis(12, 5);
    ChainState chain(cfg);
    AccountId m = account_from_name("m");
    DetRng rng{23u};

    // grow past an epoch boundary with fast blocks so bits actually change
    Mempool empty;
    uint64_t ts = cfg.genesis_timestamp;
    for (int i = 0; i < 7; ++i) {
        ts += 1;
        Block b = mine_next(chain, empty, m, ts, rng);
        REQUIRE(chain.submit_block(b).accepted);
    }
    REQUIRE(chain.at_height(6)->bits != cfg.initial_bits);

    KeyChain standalone(genesis_key(cfg.seed, cfg.initial_bits));
    BitSchedule sched = chain.schedule();
    for (uint64_t h = 0; h <= chain.predict_horizon(); ++h) {
        REQUIRE(chain.key_at(h) == standalone.at(h, sched));
    }
}
