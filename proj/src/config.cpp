#include "migsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace migsim {

namespace {

using Json = nlohmann::json;

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const Json& obj, const std::string& key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("field '" + key + "' has the wrong type");
    }
}

LinkModel parse_link(const Json& obj, const std::string& where, const LinkModel& defaults) {
    check_keys(obj, where, {"rate_bps", "latency_us", "loss_prob", "dup_prob"});
    LinkModel link = defaults;
    link.rate_bps = get_or<std::uint64_t>(obj, "rate_bps", defaults.rate_bps);
    link.latency = get_or<std::int64_t>(obj, "latency_us", defaults.latency / kMicrosecond) *
                   kMicrosecond;
    link.loss_prob = get_or<double>(obj, "loss_prob", defaults.loss_prob);
    link.dup_prob = get_or<double>(obj, "dup_prob", defaults.dup_prob);
    if (link.rate_bps == 0) throw ConfigError(where + ".rate_bps must be positive");
    if (link.latency < 0) throw ConfigError(where + ".latency_us must be non-negative");
    if (link.loss_prob < 0.0 || link.loss_prob > 1.0)
        throw ConfigError(where + ".loss_prob must be in [0,1]");
    if (link.dup_prob < 0.0 || link.dup_prob > 1.0)
        throw ConfigError(where + ".dup_prob must be in [0,1]");
    return link;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "config",
               {"seed", "link", "protocol", "cluster", "crypto", "migrate", "bench", "scenarios"});

    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);

    if (root.contains("link")) cfg.link = parse_link(root["link"], "link", cfg.link);

    if (root.contains("protocol")) {
        const Json& p = root["protocol"];
        check_keys(p, "protocol",
                   {"max_ret", "retransmit_timeout_us", "parallel_streams", "token_expiry_factor"});
        cfg.protocol.max_ret = get_or<std::uint32_t>(p, "max_ret", cfg.protocol.max_ret);
        cfg.protocol.retransmit_timeout =
            get_or<std::int64_t>(p, "retransmit_timeout_us", 0) * kMicrosecond;
        cfg.protocol.parallel_streams =
            get_or<std::uint32_t>(p, "parallel_streams", cfg.protocol.parallel_streams);
        cfg.protocol.token_expiry_factor =
            get_or<std::int64_t>(p, "token_expiry_factor", cfg.protocol.token_expiry_factor);
        if (cfg.protocol.max_ret < 1) throw ConfigError("protocol.max_ret must be >= 1");
        if (cfg.protocol.parallel_streams < 1)
            throw ConfigError("protocol.parallel_streams must be >= 1");
        if (cfg.protocol.retransmit_timeout < 0)
            throw ConfigError("protocol.retransmit_timeout_us must be non-negative");
        if (cfg.protocol.token_expiry_factor < 1)
            throw ConfigError("protocol.token_expiry_factor must be >= 1");
    }

    if (root.contains("cluster")) {
        const Json& c = root["cluster"];
        check_keys(c, "cluster", {"data_nodes_per_cloud", "block_size_bytes"});
        cfg.data_nodes_per_cloud =
            get_or<std::uint32_t>(c, "data_nodes_per_cloud", cfg.data_nodes_per_cloud);
        cfg.block_size = get_or<std::uint64_t>(c, "block_size_bytes", cfg.block_size);
        if (cfg.data_nodes_per_cloud < 1)
            throw ConfigError("cluster.data_nodes_per_cloud must be >= 1");
        if (cfg.block_size < 1) throw ConfigError("cluster.block_size_bytes must be >= 1");
    }

    if (root.contains("crypto")) {
        const Json& c = root["crypto"];
        check_keys(c, "crypto", {"kdf_log2_cost"});
        cfg.kdf_log2_cost = get_or<std::uint32_t>(c, "kdf_log2_cost", cfg.kdf_log2_cost);
        if (cfg.kdf_log2_cost < 1 || cfg.kdf_log2_cost > 20)
            throw ConfigError("crypto.kdf_log2_cost must be in [1,20]");
    }

    if (root.contains("migrate")) {
        const Json& m = root["migrate"];
        check_keys(m, "migrate", {"file_size_bytes", "owner_encrypted"});
        cfg.migrate_file_size = get_or<std::uint64_t>(m, "file_size_bytes", cfg.migrate_file_size);
        cfg.migrate_owner_encrypted =
            get_or<bool>(m, "owner_encrypted", cfg.migrate_owner_encrypted);
    }

    if (root.contains("bench")) {
        const Json& b = root["bench"];
        check_keys(b, "bench",
                   {"file_sizes", "variants", "table_file", "block_size_bytes", "rate_bps"});
        cfg.bench_file_sizes =
            get_or<std::vector<std::uint64_t>>(b, "file_sizes", cfg.bench_file_sizes);
        cfg.bench_variants = get_or<std::vector<std::string>>(b, "variants", cfg.bench_variants);
        cfg.bench_table_file = get_or<std::string>(b, "table_file", cfg.bench_table_file);
        cfg.bench_block_size = get_or<std::uint64_t>(b, "block_size_bytes", cfg.bench_block_size);
        cfg.bench_rate_bps = get_or<std::uint64_t>(b, "rate_bps", cfg.bench_rate_bps);
        if (cfg.bench_block_size < 1) throw ConfigError("bench.block_size_bytes must be >= 1");
        if (cfg.bench_rate_bps < 1) throw ConfigError("bench.rate_bps must be >= 1");
        for (auto s : cfg.bench_file_sizes) {
            if (s == 0) throw ConfigError("bench.file_sizes entries must be positive");
        }
    }

    if (root.contains("scenarios")) {
        cfg.scenarios = get_or<std::vector<std::string>>(root, "scenarios", cfg.scenarios);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

EngineConfig engine_config_from(const RunConfig& cfg) {
    EngineConfig ecfg;
    ecfg.seed = cfg.seed;
    ecfg.data_nodes_per_cloud = cfg.data_nodes_per_cloud;
    ecfg.block_size = cfg.block_size;
    ecfg.data_link = cfg.link;
    ecfg.protocol = cfg.protocol;
    ecfg.kdf = crypto::KdfParams{cfg.kdf_log2_cost, 8, 1};
    return ecfg;
}

}  // namespace migsim
