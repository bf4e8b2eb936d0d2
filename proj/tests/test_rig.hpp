#pragma once

#include "migsim/engine.hpp"

namespace migsim::testing {

struct RigOptions {
    std::uint64_t seed = 42;
    std::uint64_t block_size = 512;
    std::uint64_t file_size = 1536;  // 3 blocks
    std::uint32_t data_nodes = 2;
    std::uint32_t max_ret = 5;
    std::uint32_t parallel_streams = 1;
    LinkModel data_link{64'000'000, kMillisecond, 0.0, 0.0};
    bool owner_encrypted = true;
};

/// Two clouds, one registered user, one stored file, one session.
struct Rig {
    explicit Rig(const RigOptions& opt = {}) : options(opt), engine(make_config(opt)) {
        engine.register_user("u1",
                             {{"A", {"u1", to_bytes("pw-a"), to_bytes("salt-a")}},
                              {"B", {"u1", to_bytes("pw-b"), to_bytes("salt-b")}}});
        payload = engine.rng().bytes(opt.file_size);
        engine.store_file("A", "f", view(payload), opt.owner_encrypted);
        session_id = engine.new_migration_session("u1", "A", "B").id;
    }

    static EngineConfig make_config(const RigOptions& opt) {
        EngineConfig cfg;
        cfg.seed = opt.seed;
        cfg.block_size = opt.block_size;
        cfg.data_nodes_per_cloud = opt.data_nodes;
        cfg.data_link = opt.data_link;
        cfg.protocol.max_ret = opt.max_ret;
        cfg.protocol.parallel_streams = opt.parallel_streams;
        return cfg;
    }

    void setup() { engine.run_setup(session_id); }

    void migrate() {
        engine.request_migration(session_id, "f");
        engine.run();
    }

    MigrationSession& session() { return engine.session(session_id); }

    DataNode& source_dn(std::uint32_t i) { return engine.cloud("A").data_nodes[i]; }
    DataNode& target_dn(std::uint32_t i) { return engine.cloud("B").data_nodes[i]; }

    std::uint64_t blocks_at(const CloudId& cloud) {
        std::uint64_t n = 0;
        for (const auto& dn : engine.cloud(cloud).data_nodes) n += dn.blocks.size();
        return n;
    }

    RigOptions options;
    Engine engine;
    Bytes payload;
    SessionId session_id = 0;
};

}  // namespace migsim::testing
