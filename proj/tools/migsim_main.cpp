// migsim: deterministic migration simulator, bench runner, and attack suite.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "migsim/adversary.hpp"
#include "migsim/baselines.hpp"
#include "migsim/config.hpp"
#include "migsim/engine.hpp"
#include "migsim/metrics.hpp"

namespace fs = std::filesystem;
using namespace migsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitProtocolFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string format = "csv";
};

RunConfig load_run_config(const CommonOpts& opts) {
    RunConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Standard world for a single migration run: two clouds, one user, one file.
Engine make_migration_engine(const RunConfig& cfg) {
    Engine engine(engine_config_from(cfg));
    engine.register_user("u1", {{"A", {"u1", to_bytes("pw-a"), to_bytes("salt-a")}},
                                {"B", {"u1", to_bytes("pw-b"), to_bytes("salt-b")}}});
    Bytes payload = engine.rng().bytes(cfg.migrate_file_size);
    engine.store_file("A", "f", view(payload), cfg.migrate_owner_encrypted);
    return engine;
}

int cmd_migrate(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts);
    Engine engine = make_migration_engine(cfg);

    MigrationSession& session = engine.new_migration_session("u1", "A", "B");
    engine.run_setup(session.id);
    bool setup_ok = engine.session_established(session.id);
    if (setup_ok) {
        engine.request_migration(session.id, "f");
        engine.run();
    }

    const MigrationSession& s = engine.session(session.id);
    bool success = setup_ok && s.completed && s.ledger.all_deleted() && engine.custody_ok();

    nlohmann::ordered_json result;
    result["seed"] = cfg.seed;
    result["session"] = s.id;
    result["setup_ok"] = setup_ok;
    result["completed"] = s.completed;
    result["blocks"] = s.ledger.block_status.size();
    result["acked_deleted"] = s.ledger.count(BlockStatus::acked_deleted);
    result["failed_alerted"] = s.ledger.count(BlockStatus::failed_alerted);
    result["transmissions"] = s.ledger.transmissions;
    result["duplicates"] = s.ledger.duplicates;
    result["custody_ok"] = engine.custody_ok();
    result["sim_time_s"] = to_seconds(engine.network().now());
    nlohmann::ordered_json alerts = nlohmann::ordered_json::array();
    for (const AdminAlert& a : engine.alerts()) {
        alerts.push_back({{"cloud", a.cloud_id},
                          {"kind", to_string(a.kind)},
                          {"request_id", a.request_id},
                          {"t", a.sim_time}});
    }
    result["alerts"] = alerts;
    result["status"] = success ? "ok" : "failed";

    fs::path out(opts.out_dir);
    write_file(out / "trace.jsonl", engine.trace().to_jsonl());
    write_file(out / "migrate_report.json", result.dump(2) + "\n");
    write_file(out / "cluster_dump.txt",
               dump_state(engine.cloud("A")) + dump_state(engine.cloud("B")));

    std::cout << (success ? "migration completed" : "migration failed") << ": "
              << result["acked_deleted"].get<std::size_t>() << "/"
              << result["blocks"].get<std::size_t>() << " blocks, "
              << engine.alerts().size() << " alerts, custody "
              << (engine.custody_ok() ? "ok" : "VIOLATED") << "\n";
    if (!success) std::cerr << result.dump() << "\n";
    return success ? kExitOk : kExitProtocolFailure;
}

int cmd_bench(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts);

    TimingTable table = load_timing_table_file(cfg.bench_table_file);
    BenchParams params{cfg.bench_block_size, cfg.bench_rate_bps};
    CalibrationResult calibration = calibrate(table, params.block_size, params.rate_bps);

    std::vector<Variant> variants;
    if (cfg.bench_variants.empty()) {
        variants = all_variants();
    } else {
        for (const auto& name : cfg.bench_variants) variants.push_back(variant_from_string(name));
    }
    std::vector<std::uint64_t> sizes =
        cfg.bench_file_sizes.empty() ? table.sizes : cfg.bench_file_sizes;

    std::vector<BenchRecord> records = run_bench(variants, sizes, calibration, params);
    Report report = emit_report(records);

    nlohmann::ordered_json calib_json;
    for (const auto& [v, model] : calibration.models) {
        calib_json[to_string(v)] = {{"per_byte_crypto", model.per_byte_crypto},
                                    {"per_message_handshake", model.per_message_handshake},
                                    {"extra_messages_per_block", model.extra_messages_per_block},
                                    {"hash_passes", model.hash_passes},
                                    {"residuals", calibration.residuals.at(v)}};
    }

    fs::path out(opts.out_dir);
    if (opts.format == "structured") {
        write_file(out / "report.json", report.structured_json);
    } else {
        write_file(out / "report.csv", report.records_csv);
        write_file(out / "times_matrix.csv", report.times_matrix_csv);
        write_file(out / "degradation_matrix.csv", report.degradation_matrix_csv);
    }
    write_file(out / "calibration.json", calib_json.dump(2) + "\n");

    std::cout << report.times_matrix_csv << "\n" << report.degradation_matrix_csv;
    return kExitOk;
}

int cmd_attack(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts);

    std::vector<AttackScenario> scenarios;
    if (cfg.scenarios.empty()) {
        scenarios = builtin_scenarios();
    } else {
        for (const auto& name : cfg.scenarios) {
            auto s = find_scenario(name);
            if (!s) {
                std::cerr << "unknown scenario: " << name << "\n";
                return kExitUsage;
            }
            scenarios.push_back(std::move(*s));
        }
    }

    ScenarioRunConfig run_cfg;
    run_cfg.seed = cfg.seed;
    run_cfg.max_ret = cfg.protocol.max_ret;

    bool all_passed = true;
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (const auto& scenario : scenarios) {
        ScenarioReport report = run_scenario(scenario, run_cfg);
        all_passed = all_passed && report.passed;
        std::cout << report.summary_line() << "\n";
        results.push_back({{"name", report.name},
                           {"passed", report.passed},
                           {"completed", report.migration_completed},
                           {"stored", report.blocks_stored_at_target},
                           {"deletions", report.source_deletions},
                           {"transmissions", report.data_transmissions},
                           {"captured", report.captured_messages},
                           {"derived_plaintexts", report.derived_plaintexts},
                           {"key_material_leaked", report.key_material_leaked},
                           {"custody_ok", report.custody_ok},
                           {"alerts", report.alerts.size()},
                           {"failures", report.failures}});
    }

    write_file(fs::path(opts.out_dir) / "scenarios.json", results.dump(2) + "\n");
    return all_passed ? kExitOk : kExitProtocolFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic secure block-migration simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.add_option("--config", opts.config_path, "declarative run config (JSON)");
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the config seed");
    app.add_option("--out-dir", opts.out_dir, "output directory");
    app.add_option("--format", opts.format, "report format")
        ->check(CLI::IsMember({"csv", "structured"}));

    auto* migrate = app.add_subcommand("migrate", "run one end-to-end migration");
    auto* bench = app.add_subcommand("bench", "calibrated timing sweep across methods");
    auto* attack = app.add_subcommand("attack", "run the adversary scenario suite");
    for (auto* sub : {migrate, bench, attack}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    if (seed_opt->count() > 0) opts.seed = seed_flag;

    try {
        if (migrate->parsed()) return cmd_migrate(opts);
        if (bench->parsed()) return cmd_bench(opts);
        if (attack->parsed()) return cmd_attack(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CalibrationMissingError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return kExitProtocolFailure;
    }
    return kExitUsage;
}
