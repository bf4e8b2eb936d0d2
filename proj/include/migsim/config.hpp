#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "migsim/engine.hpp"

namespace migsim {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// One declarative file drives every subcommand; unknown fields anywhere in
/// it are rejected.
struct RunConfig {
    std::uint64_t seed = 1;
    LinkModel link{64'000'000, kMillisecond, 0.0, 0.0};  // inter-cloud data links
    ProtocolConfig protocol;
    std::uint32_t data_nodes_per_cloud = 2;
    std::uint64_t block_size = 4096;
    std::uint32_t kdf_log2_cost = 8;

    // migrate
    std::uint64_t migrate_file_size = 16384;
    bool migrate_owner_encrypted = true;

    // bench
    std::vector<std::uint64_t> bench_file_sizes;
    std::vector<std::string> bench_variants;
    std::string bench_table_file = "data/timing_reference.csv";
    std::uint64_t bench_block_size = 64ull * 1024 * 1024;
    std::uint64_t bench_rate_bps = 64'000'000;

    // attack
    std::vector<std::string> scenarios;  // empty = all built-ins
};

RunConfig parse_config(const std::string& json_text);  // throws ConfigError
RunConfig load_config_file(const std::string& path);   // throws ConfigError

/// Engine settings implied by a run config.
EngineConfig engine_config_from(const RunConfig& cfg);

}  // namespace migsim
