#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "trb/biguint.hpp"

namespace trb {

// Protocol constants fixed at chain creation. Serialized as a plain-text
// key=value record; `seed` is the hard-coded constant the whole public-key
// chain derives from.
struct GenesisConfig {
    BigUint seed = BigUint(20220704);
    unsigned initial_bits = 16;
    uint64_t target_block_time = 600;  // seconds
    uint32_t retarget_window = 10;     // blocks per difficulty epoch
    uint64_t block_reward = 50;
    uint32_t max_block_bytes = 65536;
    uint32_t version = 1;
    uint64_t genesis_timestamp = 0;

    std::string to_text() const;
    static GenesisConfig parse(const std::string& text);
    static GenesisConfig load_file(const std::filesystem::path& path);
    void save_file(const std::filesystem::path& path) const;
};

// Shared helper for the plain-text config formats: `key=value` lines,
// '#' comments, blank lines ignored.
std::map<std::string, std::string> parse_kv_text(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace trb
