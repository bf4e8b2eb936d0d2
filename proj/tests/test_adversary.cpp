#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "migsim/adversary.hpp"
#include "test_rig.hpp"

using namespace migsim;
using migsim::testing::Rig;
using migsim::testing::RigOptions;

TEST_CASE("the built-in scenario suite covers the analyzed attacks and all pass") {
    std::vector<std::string> expected_names = {
        "eavesdrop",       "diversion", "drop-data",            "drop-acks",
        "forge-ack",       "replay-data", "impersonate-metadata", "unauthorized-trigger"};
    auto scenarios = builtin_scenarios();
    REQUIRE(scenarios.size() == expected_names.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        CHECK(scenarios[i].name == expected_names[i]);
        CHECK_FALSE(scenarios[i].claim.empty());
        ScenarioReport report = run_scenario(scenarios[i], {});
        INFO(report.summary_line());
        CHECK(report.passed);
        CHECK(report.custody_ok);
        CHECK(report.derived_plaintexts == 0);
        CHECK_FALSE(report.key_material_leaked);
    }
}

TEST_CASE("eavesdropper: captures plenty, derives nothing, migration unaffected") {
    auto s = find_scenario("eavesdrop");
    REQUIRE(s.has_value());
    ScenarioReport r = run_scenario(*s, {});
    CHECK(r.passed);
    CHECK(r.captured_messages > 10);
    CHECK(r.migration_completed);
    CHECK(r.blocks_stored_at_target == 3);
    CHECK(r.source_deletions == 3);
    CHECK(r.alerts.empty());
}

TEST_CASE("diversion: attacker receives the stream but the source never deletes") {
    auto s = find_scenario("diversion");
    REQUIRE(s.has_value());
    ScenarioReport r = run_scenario(*s, {});
    CHECK(r.passed);
    CHECK_FALSE(r.migration_completed);
    CHECK(r.source_deletions == 0);
    CHECK(r.blocks_stored_at_target == 0);
    CHECK(r.data_transmissions == 6);  // MaxRet + 1 toward the impostor
    bool source_alert = false;
    for (const auto& a : r.alerts) {
        if (a.kind == AlertKind::source_max_retransmit) source_alert = true;
    }
    CHECK(source_alert);
    // the attacker did obtain ciphertext bytes; that is the point
    CHECK(r.captured_messages > 0);
    CHECK(r.derived_plaintexts == 0);
}

TEST_CASE("dropping all data bounds transmissions and preserves custody") {
    auto s = find_scenario("drop-data");
    REQUIRE(s.has_value());
    ScenarioReport r = run_scenario(*s, {});
    CHECK(r.passed);
    CHECK(r.data_transmissions == 6);
    CHECK(r.source_deletions == 0);
    CHECK(r.custody_ok);
}

TEST_CASE("dropping all acks floods the target and trips its alert") {
    auto s = find_scenario("drop-acks");
    REQUIRE(s.has_value());
    ScenarioReport r = run_scenario(*s, {});
    CHECK(r.passed);
    CHECK(r.source_deletions == 0);
    CHECK(r.blocks_stored_at_target == 3);
    bool target_alert = false;
    for (const auto& a : r.alerts) {
        if (a.kind == AlertKind::target_duplicate_flood) target_alert = true;
    }
    CHECK(target_alert);
}

TEST_CASE("scenario reports are deterministic for a fixed seed") {
    auto s = find_scenario("drop-acks");
    REQUIRE(s.has_value());
    ScenarioRunConfig cfg;
    cfg.seed = 1234;
    ScenarioReport a = run_scenario(*s, cfg);
    ScenarioReport b = run_scenario(*s, cfg);
    CHECK(a.summary_line() == b.summary_line());
    CHECK(a.captured_messages == b.captured_messages);
}

namespace {

/// Flips one payload byte of every data message: in-transit corruption.
class TamperPayloadHook : public AdversaryHook {
public:
    explicit TamperPayloadHook(AttackerKnowledge& k) : know_(&k) {}
    Verdict on_envelope(const Envelope& env, Network&) override {
        know_->capture(view(env.payload));
        Verdict v;
        try {
            wire::Message msg = wire::decode(view(env.payload));
            if (auto* dm = std::get_if<wire::DataMsg>(&msg)) {
                if (!dm->body.data.empty()) {
                    dm->body.data[0] ^= 0x80;
                    v.action = Verdict::Action::modify;
                    v.modified_payload = wire::encode(*dm);
                }
            }
        } catch (const wire::ParseError&) {
        }
        return v;
    }

private:
    AttackerKnowledge* know_;
};

}  // namespace

TEST_CASE("in-transit payload corruption is caught by the hash on every attempt") {
    AttackScenario s;
    s.name = "tamper-payload";
    s.claim = "corrupted payloads never ack and never delete";
    s.install = [](Engine& eng, AttackerKnowledge& k) {
        const auto& cfg = eng.config();
        for (std::uint32_t i = 0; i < cfg.data_nodes_per_cloud; ++i) {
            for (std::uint32_t j = 0; j < cfg.data_nodes_per_cloud; ++j) {
                eng.network().interpose(eng.data_node_address(cfg.clouds[0], i),
                                        eng.data_node_address(cfg.clouds[1], j),
                                        std::make_shared<TamperPayloadHook>(k));
            }
        }
    };
    s.expected.migration_completes = false;
    s.expected.source_deletions = 0;
    s.expected.blocks_stored_at_target = 0;
    s.expected.data_transmissions = 6;
    s.expected.require_source_alert = true;
    ScenarioReport r = run_scenario(s, {});
    INFO(r.summary_line());
    CHECK(r.passed);
}

TEST_CASE("attacker knowledge derivation does open boxes when it has the key") {
    // sanity check that an empty derived set means something: hand the
    // attacker the real key and derivation must start succeeding
    Rig rig;
    AttackerKnowledge know;
    auto hook = std::make_shared<CaptureHook>(know);
    rig.engine.network().interpose(rig.engine.name_node_address("A"),
                                   rig.engine.name_node_address("B"), hook);
    rig.setup();
    rig.migrate();
    REQUIRE(rig.session().completed);
    CHECK(know.derive_plaintexts().empty());
    know.keys.push_back(rig.session().key.material);
    CHECK_FALSE(know.derive_plaintexts().empty());
}

TEST_CASE("custody invariant holds at every event across the whole suite") {
    for (const auto& s : builtin_scenarios()) {
        ScenarioReport r = run_scenario(s, {});
        INFO(s.name);
        CHECK(r.custody_ok);
    }
}
