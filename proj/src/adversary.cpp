#include "migsim/adversary.hpp"

#include <sstream>

namespace migsim {

namespace {

constexpr const char* kAttackerAddr = "attacker";

std::vector<Engine::Domain> all_domains() {
    return {Engine::Domain::key_wrap,  Engine::Domain::trigger,  Engine::Domain::metadata,
            Engine::Domain::token,     Engine::Domain::data_hash, Engine::Domain::ack_receipt,
            Engine::Domain::internal};
}

void try_open_with_all(const crypto::SealedBox& box, SessionId sid,
                       const std::vector<Bytes>& keys, std::vector<Bytes>& out) {
    for (const Bytes& key : keys) {
        if (key.size() != crypto::kKeySize) continue;
        for (Engine::Domain d : all_domains()) {
            auto plain = crypto::open(view(key), box, Engine::aad_for(d, sid));
            if (plain) out.push_back(*plain);
        }
    }
}

}  // namespace

void AttackerKnowledge::capture(ByteView payload) {
    captured.emplace_back(payload.begin(), payload.end());
}

std::vector<Bytes> AttackerKnowledge::derive_plaintexts() const {
    std::vector<Bytes> derived;
    if (keys.empty()) return derived;
    for (const Bytes& payload : captured) {
        wire::Message msg;
        try {
            msg = wire::decode(view(payload));
        } catch (const wire::ParseError&) {
            continue;
        }
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, wire::SetupRequest>) {
                    try_open_with_all(m.wrapped_key, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::MigrateRequest>) {
                    try_open_with_all(m.trigger, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::MetadataTransfer>) {
                    try_open_with_all(m.sealed_metadata, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::SessionKeyShare>) {
                    try_open_with_all(m.sealed_key, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::TokenDelivery>) {
                    try_open_with_all(m.sealed_routing, m.session, keys, derived);
                    try_open_with_all(m.sealed_token, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::ReadRequest>) {
                    try_open_with_all(m.sealed_token, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::DataMsg>) {
                    try_open_with_all(m.body.sealed_hash, m.session, keys, derived);
                } else if constexpr (std::is_same_v<T, wire::AckMsg>) {
                    try_open_with_all(m.body.sealed_receipt, m.session, keys, derived);
                }
            },
            msg);
    }
    return derived;
}

bool AttackerKnowledge::key_material_visible(ByteView key_material) const {
    for (const Bytes& payload : captured) {
        if (contains_subsequence(view(payload), key_material)) return true;
    }
    return false;
}

Verdict CaptureHook::on_envelope(const Envelope& env, Network&) {
    know_->capture(view(env.payload));
    return {};
}

Verdict DropKindHook::on_envelope(const Envelope& env, Network&) {
    know_->capture(view(env.payload));
    bool drop = kinds_.empty();
    if (!drop) {
        try {
            wire::MsgKind k = wire::peek_kind(view(env.payload));
            for (wire::MsgKind want : kinds_) {
                if (k == want) {
                    drop = true;
                    break;
                }
            }
        } catch (const wire::ParseError&) {
        }
    }
    Verdict v;
    v.action = drop ? Verdict::Action::drop : Verdict::Action::pass;
    return v;
}

namespace {

/// Rewrites read requests so the data comes back to the attacker's own
/// endpoint instead of the requesting data node.
class DivertReadRequestHook : public AdversaryHook {
public:
    explicit DivertReadRequestHook(AttackerKnowledge& k) : know_(&k) {}

    Verdict on_envelope(const Envelope& env, Network&) override {
        know_->capture(view(env.payload));
        Verdict v;
        try {
            wire::Message msg = wire::decode(view(env.payload));
            if (auto* req = std::get_if<wire::ReadRequest>(&msg)) {
                req->reply_to = kAttackerAddr;
                v.action = Verdict::Action::modify;
                v.modified_payload = wire::encode(*req);
                return v;
            }
        } catch (const wire::ParseError&) {
        }
        return v;
    }

private:
    AttackerKnowledge* know_;
};

/// Swallows data messages and answers the source with a fabricated
/// acknowledgment that was never near the session key.
class ForgeAckHook : public AdversaryHook {
public:
    explicit ForgeAckHook(AttackerKnowledge& k) : know_(&k) {}

    Verdict on_envelope(const Envelope& env, Network& net) override {
        know_->capture(view(env.payload));
        Verdict v;
        try {
            wire::Message msg = wire::decode(view(env.payload));
            if (auto* data = std::get_if<wire::DataMsg>(&msg)) {
                wire::AckMsg forged;
                forged.session = data->session;
                forged.body.request_id = data->body.request_id;
                forged.body.sealed_receipt.nonce.assign(crypto::kAeadNonceSize, 0xab);
                forged.body.sealed_receipt.ciphertext.assign(crypto::kDigestSize + 16, 0xcd);
                forged.body.sealed_receipt.tag.assign(crypto::kTagSize, 0xef);
                net.inject(env.dst, env.src, wire::encode(forged));
                v.action = Verdict::Action::drop;
                return v;
            }
        } catch (const wire::ParseError&) {
        }
        return v;
    }

private:
    AttackerKnowledge* know_;
};

/// Passes traffic through but floods the target with extra copies of the
/// first data message it sees.
class ReplayDataHook : public AdversaryHook {
public:
    ReplayDataHook(AttackerKnowledge& k, std::uint32_t copies) : know_(&k), copies_(copies) {}

    Verdict on_envelope(const Envelope& env, Network& net) override {
        know_->capture(view(env.payload));
        if (!replayed_) {
            try {
                if (wire::peek_kind(view(env.payload)) == wire::MsgKind::data_msg) {
                    replayed_ = true;
                    for (std::uint32_t i = 0; i < copies_; ++i) {
                        net.inject(env.src, env.dst, env.payload);
                    }
                }
            } catch (const wire::ParseError&) {
            }
        }
        return {};
    }

private:
    AttackerKnowledge* know_;
    std::uint32_t copies_;
    bool replayed_ = false;
};

/// Substitutes the sealed metadata with ciphertext under the attacker's own
/// key: the classic step-1 impersonation.
class TamperMetadataHook : public AdversaryHook {
public:
    TamperMetadataHook(AttackerKnowledge& k, Bytes attacker_key)
        : know_(&k), key_(std::move(attacker_key)), rng_(0xdead) {}

    Verdict on_envelope(const Envelope& env, Network&) override {
        know_->capture(view(env.payload));
        Verdict v;
        try {
            wire::Message msg = wire::decode(view(env.payload));
            if (auto* md = std::get_if<wire::MetadataTransfer>(&msg)) {
                Bytes fake = to_bytes("no such blocks");
                md->sealed_metadata = crypto::seal(
                    view(key_), view(fake),
                    Engine::aad_for(Engine::Domain::metadata, md->session), rng_);
                v.action = Verdict::Action::modify;
                v.modified_payload = wire::encode(*md);
                return v;
            }
        } catch (const wire::ParseError&) {
        }
        return v;
    }

private:
    AttackerKnowledge* know_;
    Bytes key_;
    DetRng rng_;
};

void interpose_data_links(Engine& eng, const std::shared_ptr<AdversaryHook>& hook) {
    const auto& cfg = eng.config();
    for (std::uint32_t i = 0; i < cfg.data_nodes_per_cloud; ++i) {
        for (std::uint32_t j = 0; j < cfg.data_nodes_per_cloud; ++j) {
            eng.network().interpose(eng.data_node_address(cfg.clouds[0], i),
                                    eng.data_node_address(cfg.clouds[1], j), hook);
        }
    }
}

void interpose_all_intercloud_links(Engine& eng, const std::shared_ptr<AdversaryHook>& hook) {
    const auto& cfg = eng.config();
    eng.network().interpose(eng.user_address(), eng.name_node_address(cfg.clouds[0]), hook);
    eng.network().interpose(eng.user_address(), eng.name_node_address(cfg.clouds[1]), hook);
    eng.network().interpose(eng.name_node_address(cfg.clouds[0]),
                            eng.name_node_address(cfg.clouds[1]), hook);
    interpose_data_links(eng, hook);
}

}  // namespace

std::string ScenarioReport::summary_line() const {
    std::ostringstream out;
    out << (passed ? "PASS" : "FAIL") << " scenario " << name << ": completed="
        << (migration_completed ? "yes" : "no") << " stored=" << blocks_stored_at_target
        << " deletions=" << source_deletions << " tx=" << data_transmissions
        << " captured=" << captured_messages << " derived=" << derived_plaintexts
        << " alerts=" << alerts.size() << " custody=" << (custody_ok ? "ok" : "VIOLATED");
    if (!passed) {
        for (const auto& f : failures) out << " [" << f << "]";
    }
    return out.str();
}

std::vector<AttackScenario> builtin_scenarios() {
    std::vector<AttackScenario> out;

    {
        AttackScenario s;
        s.name = "eavesdrop";
        s.claim = "a passive listener on every inter-cloud link learns no sealed plaintext "
                  "and never sees the migration key";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            interpose_all_intercloud_links(eng, std::make_shared<CaptureHook>(k));
        };
        s.expected.migration_completes = true;
        s.expected.source_deletions = 3;
        s.expected.blocks_stored_at_target = 3;
        s.expected.require_no_alerts = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "diversion";
        s.claim = "redirecting the block reads to the attacker yields opaque bytes, no valid "
                  "acknowledgment, and the source keeps every block";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            eng.add_attacker_node(kAttackerAddr);
            interpose_data_links(eng, std::make_shared<DivertReadRequestHook>(k));
        };
        s.expected.migration_completes = false;
        s.expected.source_deletions = 0;
        s.expected.blocks_stored_at_target = 0;
        s.expected.data_transmissions = 6;  // MaxRet + 1 for the one diverted stream
        s.expected.require_source_alert = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "drop-data";
        s.claim = "dropping every data message bounds retransmissions at MaxRet+1, raises the "
                  "source alert, and loses no data";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            interpose_data_links(eng, std::make_shared<DropKindHook>(
                                          k, std::vector{wire::MsgKind::data_msg}));
        };
        s.expected.migration_completes = false;
        s.expected.source_deletions = 0;
        s.expected.blocks_stored_at_target = 0;
        s.expected.data_transmissions = 6;
        s.expected.require_source_alert = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "drop-acks";
        s.claim = "dropping every acknowledgment leaves the block at the source, floods the "
                  "target with duplicates, and trips the target alert";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            interpose_data_links(eng, std::make_shared<DropKindHook>(
                                          k, std::vector{wire::MsgKind::ack_msg}));
        };
        s.expected.migration_completes = false;
        s.expected.source_deletions = 0;
        // every block is stored exactly once at the target (ack loss does not
        // stop target-side progress) and retransmitted MaxRet+1 times
        s.expected.blocks_stored_at_target = 3;
        s.expected.data_transmissions = 18;
        s.expected.require_source_alert = true;
        s.expected.require_target_alert = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "forge-ack";
        s.claim = "fabricated acknowledgments never convince the source to delete";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            interpose_data_links(eng, std::make_shared<ForgeAckHook>(k));
        };
        s.expected.migration_completes = false;
        s.expected.source_deletions = 0;
        s.expected.blocks_stored_at_target = 0;
        s.expected.data_transmissions = 6;
        s.expected.require_source_alert = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "replay-data";
        s.claim = "replayed data messages are deduplicated, stored exactly once, and counted "
                  "toward the target flood alert";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            interpose_data_links(eng, std::make_shared<ReplayDataHook>(k, 6));
        };
        s.expected.migration_completes = true;
        s.expected.source_deletions = 3;
        s.expected.blocks_stored_at_target = 3;
        s.expected.require_target_alert = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "impersonate-metadata";
        s.claim = "an attacker posing as a peer cloud cannot produce metadata that "
                  "authenticates, so the migration aborts before any transfer";
        s.install = [](Engine& eng, AttackerKnowledge& k) {
            Bytes attacker_key(crypto::kKeySize, 0x42);
            k.keys.push_back(attacker_key);
            const auto& cfg = eng.config();
            eng.network().interpose(eng.name_node_address(cfg.clouds[0]),
                                    eng.name_node_address(cfg.clouds[1]),
                                    std::make_shared<TamperMetadataHook>(k, attacker_key));
        };
        s.expected.migration_completes = false;
        s.expected.source_deletions = 0;
        s.expected.blocks_stored_at_target = 0;
        s.expected.data_transmissions = 0;
        s.expected.require_abort = true;
        out.push_back(std::move(s));
    }
    {
        AttackScenario s;
        s.name = "unauthorized-trigger";
        s.claim = "a migration trigger without the user's key setup moves nothing";
        s.install = [](Engine& eng, AttackerKnowledge&) { eng.add_attacker_node(kAttackerAddr); };
        s.drive = [](Engine& eng, AttackerKnowledge&, SessionId sid) {
            // insider skips key setup entirely and fires a self-made trigger
            DetRng insider_rng(0xbad);
            Bytes insider_key = insider_rng.bytes(crypto::kKeySize);
            wire::MigrateRequest req;
            req.session = sid;
            req.trigger = crypto::seal(view(insider_key), view(to_bytes("f")),
                                       Engine::aad_for(Engine::Domain::trigger, sid),
                                       insider_rng);
            eng.network().inject(kAttackerAddr,
                                 eng.name_node_address(eng.config().clouds[0]),
                                 wire::encode(req));
            eng.run();
        };
        s.expected.migration_completes = false;
        s.expected.source_deletions = 0;
        s.expected.blocks_stored_at_target = 0;
        s.expected.data_transmissions = 0;
        out.push_back(std::move(s));
    }
    return out;
}

std::optional<AttackScenario> find_scenario(const std::string& name) {
    for (auto& s : builtin_scenarios()) {
        if (s.name == name) return s;
    }
    return std::nullopt;
}

ScenarioReport run_scenario(const AttackScenario& scenario, const ScenarioRunConfig& cfg) {
    EngineConfig ecfg;
    ecfg.seed = cfg.seed;
    ecfg.data_nodes_per_cloud = cfg.data_nodes_per_cloud;
    ecfg.block_size = cfg.block_size;
    ecfg.data_link = cfg.data_link;
    ecfg.protocol.max_ret = cfg.max_ret;
    ecfg.protocol.parallel_streams = cfg.parallel_streams;
    Engine eng(ecfg);

    const CloudId source = ecfg.clouds[0];
    const CloudId target = ecfg.clouds[1];
    eng.register_user("u1", {{source, {"u1", to_bytes("pw-src"), to_bytes("salt-src")}},
                             {target, {"u1", to_bytes("pw-tgt"), to_bytes("salt-tgt")}}});
    Bytes payload = eng.rng().bytes(cfg.file_size);
    eng.store_file(source, "f", view(payload), /*owner_encrypted=*/true);

    MigrationSession& session = eng.new_migration_session("u1", source, target);
    const SessionId sid = session.id;

    AttackerKnowledge knowledge;
    if (scenario.install) scenario.install(eng, knowledge);

    if (scenario.drive) {
        scenario.drive(eng, knowledge, sid);
    } else {
        eng.run_setup(sid);
        if (eng.session_established(sid)) {
            eng.request_migration(sid, "f");
            eng.run();
        }
    }

    // anything delivered straight to the attacker's endpoint is also captured
    if (eng.network().has_node(kAttackerAddr)) {
        for (const Bytes& payload_bytes : eng.attacker_inbox(kAttackerAddr)) {
            knowledge.capture(view(payload_bytes));
        }
    }

    const MigrationSession& s = eng.session(sid);
    ScenarioReport report;
    report.name = scenario.name;
    report.migration_completed = s.completed;
    report.blocks_total = s.ledger.block_status.size();
    report.source_deletions = eng.trace().count(EventKind::block_deleted);
    report.data_transmissions =
        eng.trace().count(EventKind::data_sent) + eng.trace().count(EventKind::data_retransmit);
    for (const DataNode& dn : eng.cloud(target).data_nodes) {
        for (const auto& [id, block] : dn.blocks) {
            if (id.file_id == "f") ++report.blocks_stored_at_target;
        }
    }
    report.captured_messages = knowledge.captured.size();
    report.derived_plaintexts = knowledge.derive_plaintexts().size();
    report.key_material_leaked = knowledge.key_material_visible(view(s.key.material));
    report.custody_ok = eng.custody_ok();
    report.alerts = eng.alerts();

    const ExpectedOutcome& want = scenario.expected;
    auto fail = [&report](const std::string& why) { report.failures.push_back(why); };

    if (want.migration_completes && *want.migration_completes != report.migration_completed)
        fail("completion mismatch");
    if (want.source_deletions && *want.source_deletions != report.source_deletions)
        fail("deletion count mismatch");
    if (want.data_transmissions && *want.data_transmissions != report.data_transmissions)
        fail("transmission count mismatch");
    if (want.blocks_stored_at_target &&
        *want.blocks_stored_at_target != report.blocks_stored_at_target)
        fail("stored block count mismatch");

    bool has_source_alert = false;
    bool has_target_alert = false;
    for (const AdminAlert& a : report.alerts) {
        if (a.kind == AlertKind::source_max_retransmit) has_source_alert = true;
        if (a.kind == AlertKind::target_duplicate_flood) has_target_alert = true;
    }
    if (want.require_source_alert && !has_source_alert) fail("missing source alert");
    if (want.require_target_alert && !has_target_alert) fail("missing target alert");
    if (want.require_no_alerts && !report.alerts.empty()) fail("unexpected alert");
    if (want.require_abort && !eng.trace().contains(EventKind::migration_aborted))
        fail("missing abort");
    if (want.derived_plaintexts_empty && report.derived_plaintexts != 0)
        fail("attacker derived plaintext");
    if (report.key_material_leaked) fail("key material on the wire");
    if (want.custody_holds && !report.custody_ok) fail("custody violated");

    report.passed = report.failures.empty();
    return report;
}

}  // namespace migsim
