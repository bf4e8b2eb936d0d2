#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "migsim/engine.hpp"

namespace migsim {

/// Everything a network attacker accumulated during a run: raw capturesplus
/// any keys it holds (none, unless a scenario grants some). Deriving
/// plaintexts means actually attempting to open every sealed field in every
/// capture with every held key.
struct AttackerKnowledge {
    std::vector<Bytes> captured;           // full wire payloads, in capture order
    std::vector<Bytes> keys;               // keys the attacker holds
    std::uint64_t received_as_endpoint = 0;  // envelopes delivered to the attacker node

    void capture(ByteView payload);
    /// All plaintexts recoverable from sealed fields in the captures.
    std::vector<Bytes> derive_plaintexts() const;
    /// True if the raw key material appears anywhere in the captures.
    bool key_material_visible(ByteView key_material) const;
};

/// Outcome assertions for one scenario; unset optionals are not checked.
struct ExpectedOutcome {
    std::optional<bool> migration_completes;
    std::optional<std::uint64_t> source_deletions;       // exact
    std::optional<std::uint64_t> data_transmissions;     // exact, whole run
    bool require_source_alert = false;
    bool require_target_alert = false;
    bool require_no_alerts = false;
    bool require_abort = false;
    bool derived_plaintexts_empty = true;
    bool custody_holds = true;
    std::optional<std::uint64_t> blocks_stored_at_target;  // exact
};

struct AttackScenario {
    std::string name;
    std::string claim;  // what the protocol is supposed to guarantee here
    std::function<void(Engine&, AttackerKnowledge&)> install;
    /// Optional replacement for the default drive (setup, trigger, run).
    std::function<void(Engine&, AttackerKnowledge&, SessionId)> drive;
    ExpectedOutcome expected;
};

struct ScenarioReport {
    std::string name;
    bool migration_completed = false;
    std::uint64_t blocks_total = 0;
    std::uint64_t blocks_stored_at_target = 0;
    std::uint64_t source_deletions = 0;
    std::uint64_t data_transmissions = 0;
    std::uint64_t captured_messages = 0;
    std::uint64_t derived_plaintexts = 0;
    bool key_material_leaked = false;
    bool custody_ok = true;
    std::vector<AdminAlert> alerts;
    bool passed = false;
    std::vector<std::string> failures;

    std::string summary_line() const;
};

struct ScenarioRunConfig {
    std::uint64_t seed = 7;
    std::uint32_t data_nodes_per_cloud = 2;
    std::uint64_t block_size = 512;
    std::uint64_t file_size = 1536;  // 3 blocks
    std::uint32_t max_ret = 5;
    std::uint32_t parallel_streams = 1;
    LinkModel data_link{64'000'000, kMillisecond, 0.0, 0.0};
};

/// Builds a two-cloud world with one registered user and one stored file,
/// installs the scenario's hooks, drives the full migration attempt and
/// evaluates the expected outcome.
ScenarioReport run_scenario(const AttackScenario& scenario, const ScenarioRunConfig& cfg);

/// All built-in scenarios, in canonical order.
std::vector<AttackScenario> builtin_scenarios();
std::optional<AttackScenario> find_scenario(const std::string& name);

// --- reusable hooks -------------------------------------------------------

/// Records every envelope and passes it through.
class CaptureHook : public AdversaryHook {
public:
    explicit CaptureHook(AttackerKnowledge& k) : know_(&k) {}
    Verdict on_envelope(const Envelope& env, Network&) override;

private:
    AttackerKnowledge* know_;
};

/// Captures, then drops envelopes whose message kind is in the filter
/// (empty filter = drop everything).
class DropKindHook : public AdversaryHook {
public:
    DropKindHook(AttackerKnowledge& k, std::vector<wire::MsgKind> kinds)
        : know_(&k), kinds_(std::move(kinds)) {}
    Verdict on_envelope(const Envelope& env, Network& net) override;

private:
    AttackerKnowledge* know_;
    std::vector<wire::MsgKind> kinds_;
};

}  // namespace migsim
