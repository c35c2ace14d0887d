// trb: command-line front end for the timed-release blockchain engine.
// Subcommands: keychain, encrypt, decrypt, mine, validate, chain, simulate.
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "trb/chain.hpp"
#include "trb/consensus.hpp"
#include "trb/errors.hpp"
#include "trb/genesis.hpp"
#include "trb/keychain.hpp"
#include "trb/modmath.hpp"
#include "trb/netsim.hpp"
#include "trb/trencrypt.hpp"

namespace {

using namespace trb;

bool g_records = false;  // --format records

std::vector<uint8_t> read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

void write_binary(const std::filesystem::path& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
}

AccountId parse_account(const std::string& s) {
    if (s.size() == 64) {
        try {
            auto bytes = hex_decode(s);
            AccountId id;
            std::copy(bytes.begin(), bytes.end(), id.begin());
            return id;
        } catch (const ParseError&) {
            // fall through to name hashing
        }
    }
    return account_from_name(s);
}

BitSchedule schedule_from_file(const std::filesystem::path& path) {
    auto kv = parse_kv_text(read_text_file(path));
    std::vector<std::pair<uint64_t, unsigned>> entries;
    for (const auto& [k, v] : kv) {
        entries.emplace_back(std::stoull(k), static_cast<unsigned>(std::stoul(v)));
    }
    std::sort(entries.begin(), entries.end());
    BitSchedule s;
    for (const auto& [start, bits] : entries) s.append(start, bits);
    return s;
}

BitSchedule make_schedule(const GenesisConfig& genesis, const std::string& schedule_path) {
    if (schedule_path.empty()) return BitSchedule::uniform(genesis.initial_bits);
    return schedule_from_file(schedule_path);
}

PublicKey key_for_height(const GenesisConfig& genesis, uint64_t height,
                         const std::string& schedule_path) {
    KeyChain chain(genesis_key(genesis.seed, genesis.initial_bits));
    return chain.at(height, make_schedule(genesis, schedule_path));
}

void print_key(uint64_t height, const PublicKey& key) {
    if (g_records) {
        std::cout << "height=" << height << "\n";
        std::cout << "p=" << key.p.to_string() << "\n";
        std::cout << "g=" << key.g.to_string() << "\n";
        std::cout << "h=" << key.h.to_string() << "\n";
        std::cout << "n=" << key.n.to_string() << "\n";
        return;
    }
    std::cout << "public key at height " << height << ":\n";
    std::cout << "  p = " << key.p.to_string() << " (0x" << key.p.to_hex() << ")\n";
    std::cout << "  g = " << key.g.to_string() << " (0x" << key.g.to_hex() << ")\n";
    std::cout << "  h = " << key.h.to_string() << " (0x" << key.h.to_hex() << ")\n";
    std::cout << "  n = " << key.n.to_string() << " (0x" << key.n.to_hex() << ")\n";
}

int cmd_keychain_show(const std::string& genesis_path, uint64_t height,
                      const std::string& schedule_path) {
    GenesisConfig genesis = GenesisConfig::load_file(genesis_path);
    print_key(height, key_for_height(genesis, height, schedule_path));
    return 0;
}

int cmd_keychain_verify(const std::string& genesis_path, const std::string& key_path,
                        std::optional<uint64_t> height, const std::string& schedule_path) {
    auto kv = parse_kv_text(read_text_file(key_path));
    auto need = [&](const char* k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw ParseError(std::string("key file missing field: ") + k);
        return BigUint::from_string(it->second);
    };
    PublicKey key;
    key.p = need("p");
    key.g = need("g");
    key.h = need("h");
    key.n = key.p >> 1;

    // structural invariants
    const BigUint one(1);
    bool ok = is_probable_prime(key.p, 32) && is_probable_prime(key.n, 32) &&
              one < key.g && key.g < key.p && one < key.h && key.h < key.p &&
              !(key.g == key.h) && mod_exp(key.g, key.n, key.p) == one &&
              mod_exp(key.h, key.n, key.p) == one;
    if (!ok) {
        std::cerr << "key fails the public-key invariants\n";
        return 1;
    }

    if (!genesis_path.empty()) {
        uint64_t h = height.value_or(kv.count("height") ? std::stoull(kv.at("height")) : 0);
        GenesisConfig genesis = GenesisConfig::load_file(genesis_path);
        PublicKey expect = key_for_height(genesis, h, schedule_path);
        if (!(expect.p == key.p && expect.g == key.g && expect.h == key.h)) {
            std::cerr << "key does not match the chain at height " << h << "\n";
            return 1;
        }
    }
    std::cout << (g_records ? "verified=1\n" : "key verified\n");
    return 0;
}

int cmd_encrypt(const std::string& genesis_path, uint64_t to_height,
                const std::string& in_path, const std::string& out_path,
                const std::string& schedule_path) {
    GenesisConfig genesis = GenesisConfig::load_file(genesis_path);
    PublicKey key = key_for_height(genesis, to_height, schedule_path);
    auto plaintext = read_binary(in_path);
    SystemRng rng;
    Ciphertext ct = encrypt(key, to_height, plaintext, rng);
    auto wire = encode_ciphertext(ct);
    write_binary(out_path, wire);
    if (g_records) {
        std::cout << "target_height=" << to_height << "\n";
        std::cout << "ciphertext_bytes=" << wire.size() << "\n";
    } else {
        std::cout << "encrypted " << plaintext.size() << " bytes to height " << to_height
                  << " (" << wire.size() << " bytes on the wire)\n";
    }
    return 0;
}

int cmd_decrypt(const std::string& genesis_path, const std::string& key_hex,
                const std::string& in_path, const std::string& out_path,
                const std::string& schedule_path) {
    GenesisConfig genesis = GenesisConfig::load_file(genesis_path);
    Ciphertext ct = decode_ciphertext(read_binary(in_path));
    PublicKey pk = key_for_height(genesis, ct.target_height, schedule_path);
    PrivateKey sk{BigUint::from_hex(key_hex)};
    auto plaintext = decrypt(sk, pk, ct);  // throws IntegrityError on mismatch
    write_binary(out_path, plaintext);
    if (g_records) {
        std::cout << "plaintext_bytes=" << plaintext.size() << "\n";
    } else {
        std::cout << "decrypted " << plaintext.size() << " bytes from height "
                  << ct.target_height << "\n";
    }
    return 0;
}

std::unique_ptr<ChainState> open_chain(const std::string& genesis_path,
                                       const std::string& chain_path) {
    GenesisConfig genesis = GenesisConfig::load_file(genesis_path);
    if (!std::filesystem::exists(chain_path)) {
        throw Error("chain file does not exist: " + chain_path + " (run `trb chain init`)");
    }
    auto [chain, report] = ChainState::load(chain_path, genesis);
    if (report.rejected > 0) {
        std::cerr << "warning: " << report.rejected << " invalid block(s) ignored";
        if (!report.reject_reasons.empty()) {
            std::cerr << " (first: " << report.reject_reasons.front() << ")";
        }
        std::cerr << "\n";
    }
    if (report.truncated) {
        std::cerr << "warning: trailing partial record ignored after byte "
                  << report.valid_bytes << "\n";
    }
    return std::move(chain);
}

int cmd_mine(const std::string& genesis_path, const std::string& chain_path,
             const std::string& miner, uint32_t blocks, uint32_t max_restarts,
             unsigned threads, const std::vector<std::string>& attachments,
             std::optional<uint64_t> timestamp) {
    auto chain = open_chain(genesis_path, chain_path);
    AccountId miner_id = parse_account(miner);

    Mempool pool;
    for (const auto& path : attachments) {
        Transaction tx;
        tx.kind = TxKind::Timelock;
        tx.metadata = read_binary(path);
        decode_ciphertext(tx.metadata);  // fail early on malformed input
        pool.add(std::move(tx));
    }

    for (uint32_t i = 0; i < blocks; ++i) {
        uint64_t ts = timestamp.value_or(
            chain->at_height(chain->height())->block.header.timestamp +
            chain->config().target_block_time);
        Block block = chain->assemble_block(pool, miner_id, ts);
        PublicKey pk = chain->key_at(block.header.height);

        MineOptions opts;
        opts.max_restarts = max_restarts;
        // A template can be barren (its walk graph yields only degenerate
        // collisions); roll the timestamp and retry like any other miner.
        std::optional<MineResult> mined;
        for (int roll = 0; roll < 64 && !mined; ++roll) {
            try {
                mined = mine_parallel(block.header, pk, threads > 1 ? threads : 1, opts);
            } catch (const MiningExhaustedError&) {
                block.header.timestamp += 1;
            }
        }
        if (!mined) throw MiningExhaustedError("no usable template for this block");
        block.solution = mined->solution;
        block.header.nonce = mined->solution.nonce;

        SubmitResult res = chain->submit_block(block);
        if (!res.accepted) throw Error("mined block rejected: " + res.reason);
        pool.remove_included(block.txs);

        if (g_records) {
            std::cout << "height=" << block.header.height << "\n";
            std::cout << "block_hash=" << hex_encode(res.hash) << "\n";
            std::cout << "private_key=" << mined->key.x.to_hex() << "\n";
            std::cout << "tortoise_steps=" << mined->stats.tortoise_steps << "\n";
            std::cout << "walk_steps=" << mined->stats.walk_steps << "\n";
            std::cout << "restarts=" << mined->stats.restarts << "\n";
        } else {
            std::cout << "mined block " << block.header.height << " ("
                      << hex_encode(res.hash).substr(0, 16) << "...), private key 0x"
                      << mined->key.x.to_hex() << ", " << mined->stats.walk_steps
                      << " walk steps\n";
        }
    }
    chain->save(chain_path);
    return 0;
}

int cmd_validate(const std::string& genesis_path, const std::string& chain_path,
                 const std::string& block_path) {
    auto chain = open_chain(genesis_path, chain_path);
    auto bytes = read_binary(block_path);
    ByteReader r(bytes);
    Block block = deserialize_block(r);

    // Locate the key for the block's branch position and run the full
    // solution and chain-level checks.
    const auto* existing = chain->find(header_hash(block.header));
    if (existing != nullptr) {
        std::cout << (g_records ? "valid=1\n" : "block is already on the chain\n");
        return 0;
    }
    const auto* parent = chain->find(block.header.prev_hash);
    if (parent == nullptr) throw Error("block's parent is not on the chain");
    SubmitResult res = chain->submit_block(block);
    if (!res.accepted) throw Error("invalid block: " + res.reason);
    std::cout << (g_records ? "valid=1\n" : "block is valid\n");
    return 0;
}

int cmd_chain_init(const std::string& genesis_path, const std::string& chain_path) {
    GenesisConfig genesis = GenesisConfig::load_file(genesis_path);
    ChainState chain(genesis);
    chain.save(chain_path);
    if (g_records) {
        std::cout << "genesis_hash=" << hex_encode(chain.tip()) << "\n";
    } else {
        std::cout << "initialized chain at " << chain_path << ", genesis "
                  << hex_encode(chain.tip()).substr(0, 16) << "...\n";
    }
    return 0;
}

int cmd_chain_info(const std::string& genesis_path, const std::string& chain_path) {
    auto chain = open_chain(genesis_path, chain_path);
    const auto& ledger = chain->ledger();
    if (g_records) {
        std::cout << "height=" << chain->height() << "\n";
        std::cout << "tip=" << hex_encode(chain->tip()) << "\n";
        std::cout << "blocks=" << chain->block_count() - 1 << "\n";
        std::cout << "supply=" << ledger.total_supply << "\n";
        std::cout << "accounts=" << ledger.balances.size() << "\n";
        std::cout << "released=" << ledger.released.size() << "\n";
        std::cout << "failed_releases=" << ledger.failed.size() << "\n";
        for (const auto& [acct, bal] : ledger.balances) {
            std::cout << "balance." << hex_encode(acct) << "=" << bal << "\n";
        }
        for (const auto& [start, bits] : chain->schedule().entries) {
            std::cout << "schedule." << start << "=" << bits << "\n";
        }
    } else {
        std::cout << "height " << chain->height() << ", tip "
                  << hex_encode(chain->tip()) << "\n";
        std::cout << "supply " << ledger.total_supply << " across "
                  << ledger.balances.size() << " account(s)\n";
        for (const auto& [acct, bal] : ledger.balances) {
            std::cout << "  " << hex_encode(acct) << "  " << bal << "\n";
        }
        std::cout << ledger.released.size() << " release height(s), "
                  << ledger.failed.size() << " failed release(s)\n";
        std::cout << "bit schedule:";
        for (const auto& [start, bits] : chain->schedule().entries) {
            std::cout << " " << start << ":" << bits;
        }
        std::cout << " (keys predictable through height " << chain->predict_horizon()
                  << ")\n";
    }
    return 0;
}

int cmd_chain_export(const std::string& genesis_path, const std::string& chain_path,
                     uint64_t height, const std::string& out_path) {
    auto chain = open_chain(genesis_path, chain_path);
    const auto* rec = chain->at_height(height);
    if (rec == nullptr || height == 0) throw Error("no mined block at that height");
    write_binary(out_path, serialize_block(rec->block));
    std::cout << (g_records ? "exported=1\n" : "exported block " + std::to_string(height) +
                                                   "\n");
    return 0;
}

int cmd_chain_released(const std::string& genesis_path, const std::string& chain_path,
                       std::optional<uint64_t> height) {
    auto chain = open_chain(genesis_path, chain_path);
    const auto& released = chain->ledger().released;
    for (const auto& [target, records] : released) {
        if (height && *height != target) continue;
        for (const auto& rec : records) {
            if (g_records) {
                std::cout << "target=" << target << " released_at=" << rec.released_at
                          << " plaintext=" << hex_encode(rec.plaintext) << "\n";
            } else {
                std::cout << "height " << target << " (released at " << rec.released_at
                          << "): " << hex_encode(rec.plaintext) << "\n";
            }
        }
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& report_path,
                 const std::string& experiment, uint32_t trials) {
    SimConfig cfg = SimConfig::load_file(config_path);
    std::unique_ptr<ChainState> chain;
    SimReport report = run_simulation(cfg, &chain);

    std::string text = report.to_text();
    if (experiment == "tamper") {
        DetRng rng{static_cast<uint32_t>(cfg.master_seed), 0x7a3172u};
        TamperReport tamper = tamper_experiment(*chain, trials, rng);
        text += "# tamper experiment\n" + tamper.to_text();
    } else if (experiment == "premature") {
        PrematureReport prem = premature_release_experiment(
            cfg.chain_seed, {12u, 16u}, std::max<uint32_t>(trials / 10, 10),
            cfg.master_seed);
        text += "# premature-release experiment\n" + prem.to_text();
    } else if (!experiment.empty()) {
        throw Error("unknown experiment: " + experiment);
    }

    write_text_file(report_path, text);
    if (g_records) {
        std::cout << "blocks=" << report.rows.size() << "\n";
        std::cout << "mean_interval=" << report.mean_interval << "\n";
        std::cout << "fork_count=" << report.fork_count << "\n";
    } else {
        std::cout << "simulated " << report.rows.size() << " blocks, mean interval "
                  << report.mean_interval << "s, " << report.fork_count << " fork(s); report "
                  << "written to " << report_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"timed-release proof-of-work blockchain tool"};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "output format: text or records")
        ->check(CLI::IsMember({"text", "records"}));

    // keychain
    auto* keychain = app.add_subcommand("keychain", "inspect and verify the key chain");
    keychain->require_subcommand(1);
    std::string kc_genesis, kc_schedule, kc_key;
    uint64_t kc_height = 0;
    bool kc_height_set = false;
    auto* show = keychain->add_subcommand("show", "print the public key at a height");
    show->add_option("--genesis", kc_genesis, "genesis config file")->required();
    show->add_option("--height", kc_height, "block height")->required();
    show->add_option("--bits-schedule", kc_schedule, "bit-length schedule file");
    auto* verify = keychain->add_subcommand("verify", "check a saved key record");
    verify->add_option("--key", kc_key, "key record file (records format)")->required();
    verify->add_option("--genesis", kc_genesis, "genesis config file");
    verify->add_option("--height", kc_height, "expected height")
        ->each([&](const std::string&) { kc_height_set = true; });
    verify->add_option("--bits-schedule", kc_schedule, "bit-length schedule file");

    // encrypt / decrypt
    std::string enc_genesis, enc_in, enc_out, enc_schedule;
    uint64_t enc_height = 0;
    auto* enc = app.add_subcommand("encrypt", "encrypt a file to a future block height");
    enc->add_option("--genesis", enc_genesis, "genesis config file")->required();
    enc->add_option("--to-height", enc_height, "release height")->required();
    enc->add_option("--in", enc_in, "plaintext input file")->required();
    enc->add_option("--out", enc_out, "ciphertext output file")->required();
    enc->add_option("--bits-schedule", enc_schedule, "bit-length schedule file");

    std::string dec_genesis, dec_key, dec_in, dec_out, dec_schedule;
    auto* dec = app.add_subcommand("decrypt", "decrypt a ciphertext with a mined key");
    dec->add_option("--genesis", dec_genesis, "genesis config file")->required();
    dec->add_option("--key", dec_key, "private key (hex)")->required();
    dec->add_option("--in", dec_in, "ciphertext input file")->required();
    dec->add_option("--out", dec_out, "plaintext output file")->required();
    dec->add_option("--bits-schedule", dec_schedule, "bit-length schedule file");

    // mine
    std::string mine_genesis, mine_chain, mine_miner;
    uint32_t mine_blocks = 1, mine_restarts = 64;
    unsigned mine_threads = 1;
    std::vector<std::string> mine_attach;
    std::optional<uint64_t> mine_timestamp;
    uint64_t mine_ts_raw = 0;
    auto* mine_cmd = app.add_subcommand("mine", "mine the next block(s) onto a chain file");
    mine_cmd->add_option("--genesis", mine_genesis, "genesis config file")->required();
    mine_cmd->add_option("--chain", mine_chain, "chain file")->required();
    mine_cmd->add_option("--miner", mine_miner, "miner account (name or 64-hex id)")
        ->required();
    mine_cmd->add_option("--blocks", mine_blocks, "number of blocks to mine");
    mine_cmd->add_option("--max-restarts", mine_restarts, "restart budget per block");
    mine_cmd->add_option("--threads", mine_threads, "parallel mining attempts");
    mine_cmd->add_option("--attach", mine_attach,
                         "ciphertext file to include as a timelock transaction");
    mine_cmd->add_option("--timestamp", mine_ts_raw, "fixed header timestamp")
        ->each([&](const std::string&) { mine_timestamp = mine_ts_raw; });

    // validate
    std::string val_genesis, val_chain, val_block;
    auto* val = app.add_subcommand("validate", "validate a block record against a chain");
    val->add_option("--genesis", val_genesis, "genesis config file")->required();
    val->add_option("--chain", val_chain, "chain file")->required();
    val->add_option("--block", val_block, "block record file")->required();

    // chain
    auto* chain_cmd = app.add_subcommand("chain", "chain file maintenance");
    chain_cmd->require_subcommand(1);
    std::string ch_genesis, ch_chain, ch_out;
    uint64_t ch_height = 0;
    bool ch_height_set = false;
    auto* init = chain_cmd->add_subcommand("init", "create an empty chain file");
    init->add_option("--genesis", ch_genesis, "genesis config file")->required();
    init->add_option("--chain", ch_chain, "chain file to create")->required();
    auto* info = chain_cmd->add_subcommand("info", "print tip, balances and releases");
    info->add_option("--genesis", ch_genesis, "genesis config file")->required();
    info->add_option("--chain", ch_chain, "chain file")->required();
    auto* exp = chain_cmd->add_subcommand("export", "write one block record to a file");
    exp->add_option("--genesis", ch_genesis, "genesis config file")->required();
    exp->add_option("--chain", ch_chain, "chain file")->required();
    exp->add_option("--height", ch_height, "block height to export")->required();
    exp->add_option("--out", ch_out, "output file")->required();
    auto* rel = chain_cmd->add_subcommand("released", "print released plaintexts");
    rel->add_option("--genesis", ch_genesis, "genesis config file")->required();
    rel->add_option("--chain", ch_chain, "chain file")->required();
    rel->add_option("--height", ch_height, "only this target height")
        ->each([&](const std::string&) { ch_height_set = true; });

    // simulate
    std::string sim_config, sim_report, sim_experiment;
    uint32_t sim_trials = 200;
    auto* sim = app.add_subcommand("simulate", "run the deterministic network simulation");
    sim->add_option("--config", sim_config, "simulation config file")->required();
    sim->add_option("--report", sim_report, "report output file")->required();
    sim->add_option("--experiment", sim_experiment, "extra experiment: tamper or premature")
        ->check(CLI::IsMember({"tamper", "premature"}));
    sim->add_option("--trials", sim_trials, "experiment trial count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    g_records = format == "records";

    try {
        if (show->parsed()) return cmd_keychain_show(kc_genesis, kc_height, kc_schedule);
        if (verify->parsed()) {
            return cmd_keychain_verify(
                kc_genesis, kc_key,
                kc_height_set ? std::optional<uint64_t>(kc_height) : std::nullopt,
                kc_schedule);
        }
        if (enc->parsed()) {
            return cmd_encrypt(enc_genesis, enc_height, enc_in, enc_out, enc_schedule);
        }
        if (dec->parsed()) {
            return cmd_decrypt(dec_genesis, dec_key, dec_in, dec_out, dec_schedule);
        }
        if (mine_cmd->parsed()) {
            return cmd_mine(mine_genesis, mine_chain, mine_miner, mine_blocks,
                            mine_restarts, mine_threads, mine_attach, mine_timestamp);
        }
        if (val->parsed()) return cmd_validate(val_genesis, val_chain, val_block);
        if (init->parsed()) return cmd_chain_init(ch_genesis, ch_chain);
        if (info->parsed()) return cmd_chain_info(ch_genesis, ch_chain);
        if (exp->parsed()) return cmd_chain_export(ch_genesis, ch_chain, ch_height, ch_out);
        if (rel->parsed()) {
            return cmd_chain_released(
                ch_genesis, ch_chain,
                ch_height_set ? std::optional<uint64_t>(ch_height) : std::nullopt);
        }
        if (sim->parsed()) {
            return cmd_simulate(sim_config, sim_report, sim_experiment, sim_trials);
        }
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
