#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <deque>

#include "trb/errors.hpp"
#include "trb/modmath.hpp"
#include "trb/block.hpp"
#include "trb/consensus.hpp"
#include "trb/serial.hpp"
#include "trb/trencrypt.hpp"

using namespace trb;

namespace {

// RandomSource with a scripted word stream, for pinning ephemeral values.
class StubRng final : public RandomSource {
public:
    explicit StubRng(std::initializer_list<uint32_t> words) : words_(words) {}

    uint32_t next_u32() override {
        if (words_.empty()) throw std::runtime_error("stub rng exhausted");
        uint32_t w = words_.front();
        words_.pop_front();
        return w;
    }

private:
    std::deque<uint32_t> words_;
};

std::vector<uint8_t> random_bytes(RandomSource& rng, size_t len) {
    std::vector<uint8_t> out(len);
    for (auto& b : out) b = static_cast<uint8_t>(rng.next_u32());
    return out;
}

}  // namespace

TEST_CASE("release_height arithmetic") {
    CHECK(release_height(1000, 1000, 60, 42) == 42);   // zero delay
    CHECK(release_height(0, 600, 60, 100) == 110);     // exact division
    CHECK(release_height(0, 601, 60, 100) == 111);     // ceiling, not floor
    CHECK_THROWS_AS(release_height(100, 99, 60, 0), TimeInPastError);
    CHECK_THROWS_AS(release_height(0, 10, 0, 0), Error);
}

TEST_CASE("release_height is monotone and never early") {
    DetRng rng{21u};
    for (int i = 0; i < 500; ++i) {
        int64_t t_now = static_cast<int64_t>(rng.below(100000).to_u64());
        int64_t d1 = static_cast<int64_t>(rng.below(50000).to_u64());
        int64_t d2 = static_cast<int64_t>(rng.below(50000).to_u64());
        int64_t bt = 1 + static_cast<int64_t>(rng.below(3600).to_u64());
        uint64_t h = rng.below(1000).to_u64();

        uint64_t r1 = release_height(t_now, t_now + std::min(d1, d2), bt, h);
        uint64_t r2 = release_height(t_now, t_now + std::max(d1, d2), bt, h);
        REQUIRE(r1 <= r2);  // monotone in t_release

        // never below the real-valued schedule: (r - h) * bt >= delta
        REQUIRE((r1 - h) * static_cast<uint64_t>(bt) >=
                static_cast<uint64_t>(std::min(d1, d2)));
    }
}

TEST_CASE("encrypt pins the documented construction at desk scale") {
    // p = 23, g = 2, h = 9, x = 5; scripted rng makes k = 3.
    PublicKey pk{23, 2, 9, 11};
    PrivateKey sk{5};
    REQUIRE(verify_keypair(pk, sk));

    // in_range(1, 10) -> below(10) -> rand_bits(4) == top 4 bits of the word
    StubRng rng{0x20000000u};
    const uint8_t msg[] = {'h', 'i'};
    Ciphertext ct = encrypt(pk, 7, std::span<const uint8_t>(msg, 2), rng);

    CHECK(ct.target_height == 7);
    CHECK(ct.c1 == BigUint(8));  // 2^3 mod 23

    // shared secret s = 9^3 mod 23 = 16; keystream block 0 =
    // SHA256(0x10 || be64(0))
    std::vector<uint8_t> block0_input = {0x10, 0, 0, 0, 0, 0, 0, 0, 0};
    auto ks = sha256(block0_input);
    CHECK(ct.payload.size() == 2);
    CHECK(ct.payload[0] == ('h' ^ ks[0]));
    CHECK(ct.payload[1] == ('i' ^ ks[1]));

    // tag = SHA256(0x10 || payload)
    std::vector<uint8_t> tag_input = {0x10, ct.payload[0], ct.payload[1]};
    CHECK(ct.tag == sha256(tag_input));

    // frozen reference computation of the same envelope, byte for byte
    CHECK(ct.payload == std::vector<uint8_t>{0xd2, 0xe9});
    CHECK(encode_ciphertext(ct) ==
          hex_decode("00000000000000070001087e619d3e5e63514d7bd581b69ca90d7bd1d5f6e80a"
                     "8dfe1e485f418a3d33f155d2e9"));

    auto out = decrypt(sk, pk, ct);
    CHECK(out == std::vector<uint8_t>(msg, msg + 2));
}

TEST_CASE("round trip across message sizes") {
    DetRng rng{77u};
    PublicKey pk = genesis_key(555, 24);
    PrivateKey sk = brute_force_dlog(pk);

    for (int trial = 0; trial < 500; ++trial) {
        size_t len = rng.below(4096).to_u64();
        if (trial % 50 == 0) len = 65536;  // hit the 64 KiB envelope too
        auto msg = random_bytes(rng, len);
        Ciphertext ct = encrypt(pk, 9, msg, rng);
        REQUIRE(decrypt(sk, pk, ct) == msg);
    }
}

TEST_CASE("empty plaintext gives empty payload and a valid tag") {
    DetRng rng{78u};
    PublicKey pk = genesis_key(556, 16);
    Ciphertext ct = encrypt(pk, 3, {}, rng);
    CHECK(ct.payload.empty());

    PrivateKey sk = brute_force_dlog(pk);
    CHECK(decrypt(sk, pk, ct).empty());  // tag verifies, empty comes back
}

TEST_CASE("wrong key fails the integrity check") {
    DetRng rng{79u};
    PublicKey pk = genesis_key(557, 20);
    PrivateKey sk = brute_force_dlog(pk);
    PrivateKey wrong{sk.x + 1 == pk.n ? BigUint(1) : sk.x + 1};

    for (int i = 0; i < 100; ++i) {
        auto msg = random_bytes(rng, 64);
        Ciphertext ct = encrypt(pk, 2, msg, rng);
        CHECK_THROWS_AS(decrypt(wrong, pk, ct), IntegrityError);
        CHECK(decrypt(sk, pk, ct) == msg);
    }
}

TEST_CASE("payload bit flip fails the integrity check") {
    DetRng rng{80u};
    PublicKey pk = genesis_key(558, 20);
    PrivateKey sk = brute_force_dlog(pk);

    auto msg = random_bytes(rng, 128);
    Ciphertext ct = encrypt(pk, 2, msg, rng);
    Ciphertext tampered = ct;
    tampered.payload[17] ^= 0x01;
    CHECK_THROWS_AS(decrypt(sk, pk, tampered), IntegrityError);
}

TEST_CASE("ephemeral element c1 stays in the order-n subgroup") {
    DetRng rng{81u};
    PublicKey pk = genesis_key(559, 18);
    for (int i = 0; i < 200; ++i) {
        Ciphertext ct = encrypt(pk, 1, {}, rng);
        REQUIRE(BigUint(1) < ct.c1);
        REQUIRE(ct.c1 < pk.p);
        REQUIRE(mod_exp(ct.c1, pk.n, pk.p) == BigUint(1));
    }
}

TEST_CASE("ciphertext wire format") {
    DetRng rng{82u};
    PublicKey pk = genesis_key(560, 16);
    auto msg = random_bytes(rng, 10);
    Ciphertext ct = encrypt(pk, 0x0102030405060708ull, msg, rng);

    auto wire = encode_ciphertext(ct);
    auto c1_bytes = ct.c1.to_bytes_be();
    REQUIRE(wire.size() == 8 + 2 + c1_bytes.size() + 32 + 10);
    // target height big-endian up front
    for (int i = 0; i < 8; ++i) CHECK(wire[i] == i + 1);
    CHECK(wire[8] == 0);
    CHECK(wire[9] == c1_bytes.size());
    CHECK(std::equal(c1_bytes.begin(), c1_bytes.end(), wire.begin() + 10));

    Ciphertext back = decode_ciphertext(wire);
    CHECK(back == ct);

    // truncation anywhere inside the fixed part fails cleanly
    for (size_t cut : {0u, 5u, 9u, 12u}) {
        std::vector<uint8_t> prefix(wire.begin(), wire.begin() + cut);
        CHECK_THROWS_AS(decode_ciphertext(prefix), ParseError);
    }
}

TEST_CASE("kem consistency: both sides derive the same secret") {
    DetRng rng{83u};
    for (unsigned bits : {12u, 16u, 20u}) {
        PublicKey pk = genesis_key(BigUint(600) + BigUint(bits), bits);
        PrivateKey sk = brute_force_dlog(pk);
        for (int i = 0; i < 50; ++i) {
            BigUint k = rng.in_range(1, pk.n - 1);
            BigUint enc_secret = mod_exp(pk.h, k, pk.p);
            BigUint dec_secret = mod_exp(mod_exp(pk.g, k, pk.p), sk.x, pk.p);
            REQUIRE(enc_secret == dec_secret);
        }
    }
}
