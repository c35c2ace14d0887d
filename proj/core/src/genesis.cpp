#include "trb/genesis.hpp"

#include <fstream>
#include <sstream>

#include "trb/errors.hpp"

namespace trb {

namespace {

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("invalid integer for " + key + ": " + value);
    }
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError("line " + std::to_string(lineno) + ": expected key=value");
        }
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::string GenesisConfig::to_text() const {
    std::ostringstream out;
    out << "# chain genesis configuration\n";
    out << "seed=" << seed.to_string() << "\n";
    out << "initial_bits=" << initial_bits << "\n";
    out << "target_block_time=" << target_block_time << "\n";
    out << "retarget_window=" << retarget_window << "\n";
    out << "block_reward=" << block_reward << "\n";
    out << "max_block_bytes=" << max_block_bytes << "\n";
    out << "version=" << version << "\n";
    out << "genesis_timestamp=" << genesis_timestamp << "\n";
    return out.str();
}

GenesisConfig GenesisConfig::parse(const std::string& text) {
    auto kv = parse_kv_text(text);
    GenesisConfig cfg;
    auto take = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto* v = take("seed")) cfg.seed = BigUint::from_string(*v);
    else throw ParseError("genesis config missing required key: seed");
    if (auto* v = take("initial_bits")) cfg.initial_bits = static_cast<unsigned>(parse_u64("initial_bits", *v));
    if (auto* v = take("target_block_time")) cfg.target_block_time = parse_u64("target_block_time", *v);
    if (auto* v = take("retarget_window")) cfg.retarget_window = static_cast<uint32_t>(parse_u64("retarget_window", *v));
    if (auto* v = take("block_reward")) cfg.block_reward = parse_u64("block_reward", *v);
    if (auto* v = take("max_block_bytes")) cfg.max_block_bytes = static_cast<uint32_t>(parse_u64("max_block_bytes", *v));
    if (auto* v = take("version")) cfg.version = static_cast<uint32_t>(parse_u64("version", *v));
    if (auto* v = take("genesis_timestamp")) cfg.genesis_timestamp = parse_u64("genesis_timestamp", *v);
    if (cfg.initial_bits < 4) throw ParseError("initial_bits must be at least 4");
    if (cfg.target_block_time == 0) throw ParseError("target_block_time must be positive");
    if (cfg.retarget_window == 0) throw ParseError("retarget_window must be positive");
    return cfg;
}

GenesisConfig GenesisConfig::load_file(const std::filesystem::path& path) {
    return parse(read_text_file(path));
}

void GenesisConfig::save_file(const std::filesystem::path& path) const {
    write_text_file(path, to_text());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out << text;
}

}  // namespace trb
