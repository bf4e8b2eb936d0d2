#include "migsim/engine.hpp"

#include <algorithm>

namespace migsim {

namespace {

Bytes make_receipt(const crypto::Digest& digest, const BlockId& block, RequestId rid) {
    wire::ByteWriter w;
    for (std::uint8_t b : digest.bytes) w.u8(b);
    w.str(block.file_id);
    w.u32(block.index);
    w.u64(rid);
    return w.take();
}

struct Receipt {
    crypto::Digest digest;
    BlockId block;
    RequestId rid = 0;
};

std::optional<Receipt> parse_receipt(ByteView plain) {
    try {
        wire::ByteReader r(plain);
        Receipt rec;
        for (std::size_t i = 0; i < crypto::kDigestSize; ++i) rec.digest.bytes[i] = r.u8();
        rec.block.file_id = r.str();
        rec.block.index = r.u32();
        rec.rid = r.u64();
        r.expect_done();
        return rec;
    } catch (const wire::ParseError&) {
        return std::nullopt;
    }
}

Bytes encode_routing(const BlockAccessToken& token, const NodeAddress& source_dn) {
    wire::ByteWriter w;
    Bytes t = wire::encode_token(token);
    w.blob(t);
    w.str(source_dn);
    return w.take();
}

struct Routing {
    BlockAccessToken token;
    NodeAddress source_dn;
};

std::optional<Routing> parse_routing(ByteView plain) {
    try {
        wire::ByteReader r(plain);
        Routing out;
        Bytes t = r.blob();
        out.token = wire::decode_token(t);
        out.source_dn = r.str();
        r.expect_done();
        return out;
    } catch (const wire::ParseError&) {
        return std::nullopt;
    }
}

}  // namespace

const char* to_string(AlertKind k) {
    switch (k) {
        case AlertKind::source_max_retransmit: return "source-max-retransmit";
        case AlertKind::target_duplicate_flood: return "target-duplicate-flood";
    }
    return "unknown";
}

const char* to_string(BlockStatus s) {
    switch (s) {
        case BlockStatus::pending: return "pending";
        case BlockStatus::sent: return "sent";
        case BlockStatus::acked_deleted: return "acked-deleted";
        case BlockStatus::failed_alerted: return "failed-alerted";
    }
    return "unknown";
}

bool MigrationLedger::all_deleted() const {
    if (block_status.empty()) return true;
    return std::all_of(block_status.begin(), block_status.end(),
                       [](const auto& kv) { return kv.second == BlockStatus::acked_deleted; });
}

bool MigrationLedger::any_failed() const {
    return std::any_of(block_status.begin(), block_status.end(),
                       [](const auto& kv) { return kv.second == BlockStatus::failed_alerted; });
}

std::size_t MigrationLedger::count(BlockStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(block_status.begin(), block_status.end(),
                      [s](const auto& kv) { return kv.second == s; }));
}

Bytes Engine::aad_for(Domain d, SessionId session) {
    wire::ByteWriter w;
    w.u8(static_cast<std::uint8_t>(d));
    w.u64(session);
    return w.take();
}

Engine::Engine(const EngineConfig& cfg) : cfg_(cfg), rng_(cfg.seed), net_(rng_) {
    // derived retransmit timeout: twice the round trip plus one block's
    // serialization time on the data link
    if (cfg_.protocol.retransmit_timeout > 0) {
        retransmit_timeout_ = cfg_.protocol.retransmit_timeout;
    } else {
        unsigned __int128 block_ns = static_cast<unsigned __int128>(cfg_.block_size) * 8u *
                                     1'000'000'000u / cfg_.data_link.rate_bps;
        retransmit_timeout_ =
            2 * (2 * cfg_.data_link.latency + static_cast<SimTime>(block_ns)) + kMillisecond;
    }

    net_.add_node(user_address());
    actors_[user_address()] = ActorRef{ActorRef::Role::user, "", 0};

    for (const CloudId& c : cfg_.clouds) {
        Cluster cluster;
        cluster.id = c;
        cluster.name_node.cloud_id = c;
        cluster.name_node.address = name_node_address(c);
        cluster.internal_key = rng_.bytes(crypto::kKeySize);
        for (std::uint32_t i = 0; i < cfg_.data_nodes_per_cloud; ++i) {
            DataNode dn;
            dn.cloud_id = c;
            dn.address = data_node_address(c, i);
            cluster.data_nodes.push_back(std::move(dn));
        }
        clusters_[c] = std::move(cluster);

        actors_[name_node_address(c)] = ActorRef{ActorRef::Role::name_node, c, 0};
        net_.add_link(user_address(), name_node_address(c), cfg_.control_link);
        for (std::uint32_t i = 0; i < cfg_.data_nodes_per_cloud; ++i) {
            actors_[data_node_address(c, i)] = ActorRef{ActorRef::Role::data_node, c, i};
            net_.add_link(name_node_address(c), data_node_address(c, i), cfg_.internal_link);
        }
    }

    // inter-cloud links: name node pair on the control model, every
    // data-node pair on the data model
    for (std::size_t a = 0; a < cfg_.clouds.size(); ++a) {
        for (std::size_t b = a + 1; b < cfg_.clouds.size(); ++b) {
            const CloudId& ca = cfg_.clouds[a];
            const CloudId& cb = cfg_.clouds[b];
            net_.add_link(name_node_address(ca), name_node_address(cb), cfg_.control_link);
            for (std::uint32_t i = 0; i < cfg_.data_nodes_per_cloud; ++i) {
                for (std::uint32_t j = 0; j < cfg_.data_nodes_per_cloud; ++j) {
                    net_.add_link(data_node_address(ca, i), data_node_address(cb, j),
                                  cfg_.data_link);
                }
            }
        }
    }
}

Cluster& Engine::cloud(const CloudId& id) {
    auto it = clusters_.find(id);
    if (it == clusters_.end()) throw UnknownCloudError(id);
    return it->second;
}

const Cluster& Engine::cloud(const CloudId& id) const {
    auto it = clusters_.find(id);
    if (it == clusters_.end()) throw UnknownCloudError(id);
    return it->second;
}

void Engine::register_user(const UserId& user, const std::map<CloudId, Credentials>& creds) {
    for (const auto& [cloud_id, cred] : creds) {
        Cluster& cluster = cloud(cloud_id);
        Account acct;
        acct.salt = cred.salt;
        acct.wrap_key = crypto::derive_key(view(cred.password), view(cred.salt), cfg_.kdf);
        cluster.name_node.accounts[user] = std::move(acct);
    }
    users_[user] = creds;
}

MetadataRecord Engine::store_file(const CloudId& cloud_id, const FileId& file, ByteView payload,
                                  bool owner_encrypted) {
    return put_file(cloud(cloud_id), file, payload, owner_encrypted, cfg_.block_size);
}

MigrationSession& Engine::new_migration_session(const UserId& user, const CloudId& source,
                                                const CloudId& target) {
    if (!clusters_.count(source)) throw UnknownCloudError(source);
    if (!clusters_.count(target)) throw UnknownCloudError(target);
    if (source == target) throw SameCloudError();
    auto uit = users_.find(user);
    if (uit == users_.end() || !uit->second.count(source) || !uit->second.count(target))
        throw UnknownUserError(user);

    MigrationSession s;
    s.id = next_session_++;
    s.user = user;
    s.source = source;
    s.target = target;
    s.key.key_id = next_key_id_++;
    s.key.material = rng_.bytes(crypto::kKeySize);
    auto [it, _] = sessions_.emplace(s.id, std::move(s));
    return it->second;
}

MigrationSession& Engine::session(SessionId id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSessionError(id);
    return it->second;
}

const MigrationSession& Engine::session(SessionId id) const {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSessionError(id);
    return it->second;
}

bool Engine::session_established(SessionId id) const { return session(id).established; }

void Engine::start_key_setup(SessionId sid) {
    MigrationSession& s = session(sid);
    const auto& creds = users_.at(s.user);
    for (const CloudId& c : {s.source, s.target}) {
        const Credentials& cred = creds.at(c);
        Bytes wrap_key = crypto::derive_key(view(cred.password), view(cred.salt), cfg_.kdf);
        wire::SetupRequest req;
        req.session = sid;
        req.user = s.user;
        req.wrapped_key =
            crypto::seal(view(wrap_key), view(s.key.material), aad_for(Domain::key_wrap, sid), rng_);
        net_.send(user_address(), name_node_address(c), wire::encode(req));
        trace_.add(net_.now(), user_address(), EventKind::setup_sent, std::nullopt, "cloud=" + c);
    }
}

void Engine::run_setup(SessionId sid) {
    start_key_setup(sid);
    run();
}

void Engine::request_migration(SessionId sid, const FileId& file) {
    MigrationSession& s = session(sid);
    s.file_id = file;
    wire::MigrateRequest req;
    req.session = sid;
    req.trigger = crypto::seal(view(s.key.material), view(to_bytes(file)),
                               aad_for(Domain::trigger, sid), rng_);
    net_.send(user_address(), name_node_address(s.source), wire::encode(req));
    trace_.add(net_.now(), user_address(), EventKind::migrate_requested, std::nullopt,
               "file=" + file);
}

bool Engine::step() {
    auto ev = net_.step();
    if (!ev) return false;
    dispatch(*ev);
    check_custody();
    return true;
}

void Engine::run() {
    while (step()) {
    }
}

void Engine::dispatch(const SimEvent& ev) {
    if (ev.timer) {
        auto it = actors_.find(ev.timer->owner);
        if (it == actors_.end()) return;
        const ActorRef& ref = it->second;
        if (ref.role == ActorRef::Role::data_node) {
            DataNode& node = clusters_.at(ref.cloud).data_nodes[ref.dn_index];
            if (ev.timer->kind == kTimerRetransmit) {
                handle_timeout(node, ev.timer->request_id);
            } else if (ev.timer->kind == kTimerRequestRetry) {
                handle_request_retry(node, ev.timer->request_id);
            }
        }
        return;
    }
    on_message(ev.delivery->dst, *ev.delivery);
}

void Engine::on_message(const NodeAddress& dst, const Envelope& env) {
    auto it = actors_.find(dst);
    if (it == actors_.end()) return;
    const ActorRef& ref = it->second;

    if (ref.role == ActorRef::Role::attacker) {
        attacker_inboxes_[dst].push_back(env.payload);
        return;
    }

    wire::Message msg;
    try {
        msg = wire::decode(view(env.payload));
    } catch (const wire::ParseError&) {
        trace_.add(net_.now(), dst, EventKind::security_event, std::nullopt, "malformed message");
        return;
    }

    switch (ref.role) {
        case ActorRef::Role::user:
            user_on_message(msg, env);
            break;
        case ActorRef::Role::name_node:
            namenode_on_message(clusters_.at(ref.cloud), msg, env);
            break;
        case ActorRef::Role::data_node:
            datanode_on_message(clusters_.at(ref.cloud),
                                clusters_.at(ref.cloud).data_nodes[ref.dn_index], msg, env);
            break;
        case ActorRef::Role::attacker:
            break;
    }
}

// --- user actor ------------------------------------------------------------

void Engine::user_on_message(const wire::Message& msg, const Envelope& env) {
    if (!std::holds_alternative<wire::SetupResponse>(msg)) return;
    const auto& resp = std::get<wire::SetupResponse>(msg);
    auto sit = sessions_.find(resp.session);
    if (sit == sessions_.end()) return;
    MigrationSession& s = sit->second;

    if (env.src == name_node_address(s.source) && !s.source_setup_ok.has_value()) {
        s.source_setup_ok = resp.ok;
    } else if (env.src == name_node_address(s.target) && !s.target_setup_ok.has_value()) {
        s.target_setup_ok = resp.ok;
    } else {
        return;  // duplicate or unsolicited response
    }
    if (!s.source_setup_ok.has_value() || !s.target_setup_ok.has_value()) return;

    if (*s.source_setup_ok && *s.target_setup_ok) {
        for (const CloudId& c : {s.source, s.target}) {
            wire::SetupCommit commit;
            commit.session = s.id;
            net_.send(user_address(), name_node_address(c), wire::encode(commit));
        }
        trace_.add(net_.now(), user_address(), EventKind::setup_commit, std::nullopt,
                   "session=" + std::to_string(s.id));
    } else {
        // no partial sessions: roll back whichever side accepted
        for (const CloudId& c : {s.source, s.target}) {
            wire::SetupAbort abort;
            abort.session = s.id;
            net_.send(user_address(), name_node_address(c), wire::encode(abort));
        }
        s.setup_failed = true;
        trace_.add(net_.now(), user_address(), EventKind::setup_failed, std::nullopt,
                   "session=" + std::to_string(s.id));
    }
}

// --- name node -------------------------------------------------------------

void Engine::namenode_on_message(Cluster& cluster, const wire::Message& msg,
                                 const Envelope& env) {
    NameNode& nn = cluster.name_node;

    if (const auto* req = std::get_if<wire::SetupRequest>(&msg)) {
        wire::SetupResponse resp;
        resp.session = req->session;
        auto acct = nn.accounts.find(req->user);
        if (acct == nn.accounts.end()) {
            resp.ok = false;
            resp.reason = "unknown-user";
        } else {
            auto plain = crypto::open(view(acct->second.wrap_key), req->wrapped_key,
                                      aad_for(Domain::key_wrap, req->session));
            if (!plain || plain->size() != crypto::kKeySize) {
                resp.ok = false;
                resp.reason = "auth-failure";
                trace_.add(net_.now(), nn.address, EventKind::setup_failed, std::nullopt,
                           "auth-failure user=" + req->user);
            } else {
                MigrationKey key;
                key.key_id = req->session;
                key.material = *plain;
                nn.provisional_keys[req->session] = std::move(key);
                resp.ok = true;
                trace_.add(net_.now(), nn.address, EventKind::setup_ok, std::nullopt,
                           "session=" + std::to_string(req->session));
            }
        }
        net_.send(nn.address, env.src, wire::encode(resp));
        return;
    }

    if (const auto* commit = std::get_if<wire::SetupCommit>(&msg)) {
        auto it = nn.provisional_keys.find(commit->session);
        if (it == nn.provisional_keys.end()) return;
        nn.session_keys[commit->session] = it->second;
        nn.provisional_keys.erase(it);
        trace_.add(net_.now(), nn.address, EventKind::session_established, std::nullopt,
                   "session=" + std::to_string(commit->session));

        // share the migration key with this cloud's data nodes over the internal channel
        const MigrationKey& key = nn.session_keys[commit->session];
        for (const DataNode& dn : cluster.data_nodes) {
            wire::SessionKeyShare share;
            share.session = commit->session;
            share.sealed_key = crypto::seal(view(cluster.internal_key), view(key.material),
                                            aad_for(Domain::internal, commit->session), rng_);
            net_.send(nn.address, dn.address, wire::encode(share));
        }

        auto sit = sessions_.find(commit->session);
        if (sit != sessions_.end()) {
            MigrationSession& s = sit->second;
            bool src_ready = clusters_.at(s.source).name_node.session_keys.count(s.id) > 0;
            bool tgt_ready = clusters_.at(s.target).name_node.session_keys.count(s.id) > 0;
            if (src_ready && tgt_ready) s.established = true;
        }
        return;
    }

    if (const auto* abort = std::get_if<wire::SetupAbort>(&msg)) {
        if (nn.provisional_keys.erase(abort->session) > 0) {
            trace_.add(net_.now(), nn.address, EventKind::setup_abort, std::nullopt,
                       "session=" + std::to_string(abort->session));
        }
        return;
    }

    if (const auto* req = std::get_if<wire::MigrateRequest>(&msg)) {
        start_migration_at_source(cluster, *req);
        return;
    }

    if (const auto* md = std::get_if<wire::MetadataTransfer>(&msg)) {
        target_on_metadata(cluster, *md);
        return;
    }

    if (const auto* rej = std::get_if<wire::MetadataReject>(&msg)) {
        trace_.add(net_.now(), nn.address, EventKind::migration_aborted, std::nullopt,
                   "metadata rejected by peer: " + rej->reason);
        auto sit = sessions_.find(rej->session);
        if (sit != sessions_.end()) sit->second.aborted = true;
        return;
    }

    if (const auto* note = std::get_if<wire::BlockStoredNote>(&msg)) {
        auto sit = sessions_.find(note->session);
        if (sit == sessions_.end()) return;
        MigrationSession& s = sit->second;
        s.target_stored += 1;
        // register arrival in the target name node's metadata
        MetadataRecord& md = nn.files[s.file_id];
        md.block_ids.push_back(note->block_id);
        md.datanode_addresses.push_back(env.src);
        md.file_size += note->block_bytes;
        if (s.target_stored == s.launch_order.size()) {
            trace_.add(net_.now(), nn.address, EventKind::target_file_complete, std::nullopt,
                       "file=" + s.file_id);
        }
        launch_next_blocks(s);
        return;
    }
}

void Engine::start_migration_at_source(Cluster& source, const wire::MigrateRequest& msg) {
    NameNode& nn = source.name_node;
    auto key_it = nn.session_keys.find(msg.session);
    if (key_it == nn.session_keys.end()) {
        trace_.add(net_.now(), nn.address, EventKind::migration_rejected, std::nullopt,
                   "unknown-session");
        trace_.add(net_.now(), nn.address, EventKind::security_event, std::nullopt,
                   "migration trigger without established session");
        return;
    }
    auto plain = crypto::open(view(key_it->second.material), msg.trigger,
                              aad_for(Domain::trigger, msg.session));
    if (!plain) {
        trace_.add(net_.now(), nn.address, EventKind::migration_rejected, std::nullopt,
                   "trigger-auth-failure");
        trace_.add(net_.now(), nn.address, EventKind::security_event, std::nullopt,
                   "unauthenticated migration trigger");
        return;
    }
    FileId file(plain->begin(), plain->end());
    auto file_it = nn.files.find(file);
    if (file_it == nn.files.end()) {
        trace_.add(net_.now(), nn.address, EventKind::migration_rejected, std::nullopt,
                   "unknown-file " + file);
        return;
    }

    auto sit = sessions_.find(msg.session);
    if (sit == sessions_.end()) {
        trace_.add(net_.now(), nn.address, EventKind::migration_rejected, std::nullopt,
                   "unknown-session");
        return;
    }
    MigrationSession& s = sit->second;
    s.file_id = file;
    for (const BlockId& b : file_it->second.block_ids) {
        s.ledger.block_status[b] = BlockStatus::pending;
        s.ledger.transmissions_per_block[b] = 0;
    }
    if (!file_it->second.block_ids.empty()) {
        const DataNode* holder = source.node_holding(file_it->second.block_ids.front());
        if (holder) {
            s.file_owner_encrypted =
                holder->blocks.at(file_it->second.block_ids.front()).owner_encrypted;
        }
    }
    label_step(s, 1, "migration-key");

    wire::MetadataTransfer transfer;
    transfer.session = msg.session;
    transfer.sealed_metadata =
        crypto::seal(view(key_it->second.material), view(wire::encode_metadata(file_it->second)),
                     aad_for(Domain::metadata, msg.session), rng_);
    net_.send(nn.address, name_node_address(s.target), wire::encode(transfer));
    trace_.add(net_.now(), nn.address, EventKind::metadata_sent, std::nullopt, "file=" + file);
}

void Engine::target_on_metadata(Cluster& target, const wire::MetadataTransfer& msg) {
    NameNode& nn = target.name_node;
    auto key_it = nn.session_keys.find(msg.session);
    std::optional<Bytes> plain;
    if (key_it != nn.session_keys.end()) {
        plain = crypto::open(view(key_it->second.material), msg.sealed_metadata,
                             aad_for(Domain::metadata, msg.session));
    }
    if (!plain) {
        trace_.add(net_.now(), nn.address, EventKind::metadata_rejected, std::nullopt,
                   key_it == nn.session_keys.end() ? "unknown-session" : "auth-failure");
        trace_.add(net_.now(), nn.address, EventKind::security_event, std::nullopt,
                   "metadata did not authenticate");
        trace_.add(net_.now(), nn.address, EventKind::migration_aborted, std::nullopt,
                   "metadata rejected");
        wire::MetadataReject rej;
        rej.session = msg.session;
        rej.reason = "auth-failure";
        auto sit = sessions_.find(msg.session);
        if (sit != sessions_.end()) {
            sit->second.aborted = true;
            net_.send(nn.address, name_node_address(sit->second.source), wire::encode(rej));
        }
        return;
    }

    MetadataRecord md;
    try {
        md = wire::decode_metadata(view(*plain));
    } catch (const wire::ParseError&) {
        trace_.add(net_.now(), nn.address, EventKind::security_event, std::nullopt,
                   "metadata malformed after open");
        return;
    }
    trace_.add(net_.now(), nn.address, EventKind::metadata_opened, std::nullopt,
               "blocks=" + std::to_string(md.block_ids.size()));
    issue_tokens(msg.session, md);
}

std::vector<RequestId> Engine::issue_tokens(SessionId sid, const MetadataRecord& md) {
    auto sit = sessions_.find(sid);
    if (sit == sessions_.end()) return {};
    MigrationSession& s = sit->second;
    Cluster& target = clusters_.at(s.target);
    NameNode& nn = target.name_node;
    auto key_it = nn.session_keys.find(sid);
    if (key_it == nn.session_keys.end()) return {};

    std::vector<RequestId> rids;
    const std::size_t dn_count = target.data_nodes.size();
    for (std::size_t i = 0; i < md.block_ids.size(); ++i) {
        RequestId rid = next_request_++;
        DataNode& dn = target.data_nodes[i % dn_count];

        BlockAccessToken token;
        token.block_id = md.block_ids[i];
        token.target_datanode = dn.address;
        token.request_id = rid;
        token.expiry = net_.now() + cfg_.protocol.token_expiry_factor * retransmit_timeout_;

        wire::TokenDelivery delivery;
        delivery.session = sid;
        delivery.request_id = rid;
        delivery.sealed_token = crypto::seal(view(key_it->second.material),
                                             view(wire::encode_token(token)),
                                             aad_for(Domain::token, sid), rng_);
        delivery.sealed_routing =
            crypto::seal(view(target.internal_key),
                         view(encode_routing(token, md.datanode_addresses[i])),
                         aad_for(Domain::internal, sid), rng_);
        net_.send(nn.address, dn.address, wire::encode(delivery));

        s.launch_order.push_back(rid);
        s.request_blocks[rid] = md.block_ids[i];
        s.request_source_nodes[rid] = md.datanode_addresses[i];
        rids.push_back(rid);
    }
    trace_.add(net_.now(), nn.address, EventKind::tokens_issued, std::nullopt,
               "count=" + std::to_string(rids.size()));
    label_step(s, 3, "internal");

    if (md.block_ids.empty()) {
        s.completed = true;
        trace_.add(net_.now(), nn.address, EventKind::migration_completed, std::nullopt,
                   "blocks=0");
        return rids;
    }
    launch_next_blocks(s);
    return rids;
}

void Engine::launch_next_blocks(MigrationSession& s) {
    Cluster& target = clusters_.at(s.target);
    std::size_t in_flight = s.next_launch - std::min(s.next_launch, s.target_stored);
    while (s.next_launch < s.launch_order.size() && in_flight < cfg_.protocol.parallel_streams) {
        RequestId rid = s.launch_order[s.next_launch];
        std::size_t dn_index = s.next_launch % target.data_nodes.size();
        wire::StartBlock start;
        start.session = s.id;
        start.request_id = rid;
        net_.send(target.name_node.address, target.data_nodes[dn_index].address,
                  wire::encode(start));
        ++s.next_launch;
        ++in_flight;
    }
}

// --- data node -------------------------------------------------------------

void Engine::send_read_request(DataNode& node, RequestId rid, SessionId sid, bool retry) {
    auto tok = node.token_cache.find(rid);
    auto rt = node.token_routing.find(rid);
    if (tok == node.token_cache.end() || rt == node.token_routing.end()) return;

    wire::ReadRequest req;
    req.session = sid;
    req.request_id = rid;
    req.block_id = tok->second.block_id;
    req.reply_to = node.address;
    req.sealed_token = rt->second.sealed_token;
    net_.send(node.address, rt->second.source_dn, wire::encode(req));
    trace_.add(net_.now(), node.address, EventKind::read_request_sent, rid,
               retry ? "retry block=" + tok->second.block_id.to_string()
                     : "block=" + tok->second.block_id.to_string());
    // the request itself can vanish; keep asking until data shows up or the
    // capability lapses
    net_.schedule_timer(node.address, kTimerRequestRetry, rid, sid,
                        net_.now() + retransmit_timeout_);
    auto sit = sessions_.find(sid);
    if (sit != sessions_.end()) label_step(sit->second, 4, "migration-key");
}

void Engine::handle_request_retry(DataNode& node, RequestId rid) {
    if (node.cached_acks.count(rid)) return;  // data arrived and was acknowledged
    auto tok = node.token_cache.find(rid);
    auto rt = node.token_routing.find(rid);
    if (tok == node.token_cache.end() || rt == node.token_routing.end()) return;
    if (tok->second.expiry < net_.now()) {
        trace_.add(net_.now(), node.address, EventKind::token_expired, rid,
                   "giving up on unanswered request");
        return;
    }
    send_read_request(node, rid, rt->second.session, true);
}

const MigrationKey* Engine::datanode_session_key(const DataNode& node, SessionId sid) const {
    auto it = node.session_keys.find(sid);
    return it == node.session_keys.end() ? nullptr : &it->second;
}

void Engine::datanode_on_message(Cluster& cluster, DataNode& node, const wire::Message& msg,
                                 const Envelope& env) {
    if (const auto* share = std::get_if<wire::SessionKeyShare>(&msg)) {
        auto plain = crypto::open(view(cluster.internal_key), share->sealed_key,
                                  aad_for(Domain::internal, share->session));
        if (plain && plain->size() == crypto::kKeySize) {
            MigrationKey key;
            key.key_id = share->session;
            key.material = *plain;
            node.session_keys[share->session] = std::move(key);
        }
        return;
    }

    if (const auto* delivery = std::get_if<wire::TokenDelivery>(&msg)) {
        auto plain = crypto::open(view(cluster.internal_key), delivery->sealed_routing,
                                  aad_for(Domain::internal, delivery->session));
        auto routing = plain ? parse_routing(view(*plain)) : std::nullopt;
        if (!routing) {
            trace_.add(net_.now(), node.address, EventKind::security_event, delivery->request_id,
                       "token routing did not authenticate");
            return;
        }
        node.token_cache[delivery->request_id] = routing->token;
        node.token_routing[delivery->request_id] =
            TokenRouting{delivery->sealed_token, routing->source_dn, delivery->session};
        trace_.add(net_.now(), node.address, EventKind::token_delivered, delivery->request_id,
                   "block=" + routing->token.block_id.to_string());
        return;
    }

    if (const auto* start = std::get_if<wire::StartBlock>(&msg)) {
        trace_.add(net_.now(), node.address, EventKind::block_started, start->request_id, "");
        send_read_request(node, start->request_id, start->session, false);
        return;
    }

    if (const auto* req = std::get_if<wire::ReadRequest>(&msg)) {
        handle_read_request(node, *req);
        return;
    }

    if (const auto* data = std::get_if<wire::DataMsg>(&msg)) {
        handle_data(node, *data, env.src);
        return;
    }

    if (const auto* ack = std::get_if<wire::AckMsg>(&msg)) {
        handle_ack(node, *ack);
        return;
    }

    if (const auto* rej = std::get_if<wire::ReadReject>(&msg)) {
        trace_.add(net_.now(), node.address, EventKind::read_rejected, rej->request_id,
                   "peer: " + rej->reason);
        return;
    }
}

void Engine::handle_read_request(DataNode& node, const wire::ReadRequest& msg) {
    if (node.completed_requests.count(msg.request_id) || node.pending.count(msg.request_id)) {
        trace_.add(net_.now(), node.address, EventKind::read_request_ignored, msg.request_id,
                   "duplicate request id");
        return;
    }
    const MigrationKey* key = datanode_session_key(node, msg.session);
    if (!key) {
        trace_.add(net_.now(), node.address, EventKind::security_event, msg.request_id,
                   "read request for unknown session");
        return;
    }
    auto plain = crypto::open(view(key->material), msg.sealed_token,
                              aad_for(Domain::token, msg.session));
    if (!plain) {
        trace_.add(net_.now(), node.address, EventKind::token_rejected, msg.request_id,
                   "token auth failure");
        trace_.add(net_.now(), node.address, EventKind::security_event, msg.request_id,
                   "unverifiable block access token");
        return;
    }
    BlockAccessToken token;
    try {
        token = wire::decode_token(view(*plain));
    } catch (const wire::ParseError&) {
        trace_.add(net_.now(), node.address, EventKind::token_rejected, msg.request_id,
                   "token malformed");
        return;
    }
    if (token.request_id != msg.request_id || token.block_id != msg.block_id) {
        trace_.add(net_.now(), node.address, EventKind::token_rejected, msg.request_id,
                   "token does not match request");
        trace_.add(net_.now(), node.address, EventKind::security_event, msg.request_id,
                   "token/request mismatch");
        return;
    }
    if (token.expiry < net_.now()) {
        trace_.add(net_.now(), node.address, EventKind::token_expired, msg.request_id,
                   "block=" + token.block_id.to_string());
        return;
    }
    auto block_it = node.blocks.find(token.block_id);
    if (block_it == node.blocks.end()) {
        wire::ReadReject rej;
        rej.session = msg.session;
        rej.request_id = msg.request_id;
        rej.reason = "missing-block";
        net_.send(node.address, msg.reply_to, wire::encode(rej));
        trace_.add(net_.now(), node.address, EventKind::read_rejected, msg.request_id,
                   "missing-block " + token.block_id.to_string());
        return;
    }

    // token verified, block present: send the data with a sealed digest and
    // arm the retransmission timer
    RetransmitState st;
    st.request_id = msg.request_id;
    st.block_id = token.block_id;
    st.attempt = 1;
    st.session = msg.session;
    st.dest = msg.reply_to;
    st.nonce = rng_.bytes(kDataNonceSize);
    st.digest = crypto::hash_digest(view(block_it->second.payload), view(st.nonce));
    st.sealed_hash = crypto::seal(view(key->material), ByteView(st.digest.bytes),
                                  aad_for(Domain::data_hash, msg.session), rng_);
    auto [pit, _] = node.pending.emplace(msg.request_id, std::move(st));
    send_data_msg(node, pit->second, false);
}

void Engine::send_data_msg(DataNode& node, RetransmitState& st, bool retransmit) {
    const DataBlock& block = node.blocks.at(st.block_id);
    wire::DataMsg data;
    data.session = st.session;
    data.body.request_id = st.request_id;
    data.body.block_id = st.block_id;
    data.body.data = block.payload;
    data.body.nonce = st.nonce;
    data.body.sealed_hash = st.sealed_hash;
    data.body.attempt = st.attempt;
    net_.send(node.address, st.dest, wire::encode(data));

    st.timer_deadline = net_.now() + retransmit_timeout_;
    net_.schedule_timer(node.address, kTimerRetransmit, st.request_id, st.session,
                        st.timer_deadline);

    trace_.add(net_.now(), node.address,
               retransmit ? EventKind::data_retransmit : EventKind::data_sent, st.request_id,
               "attempt=" + std::to_string(st.attempt));
    auto sit = sessions_.find(st.session);
    if (sit != sessions_.end()) {
        MigrationSession& s = sit->second;
        s.ledger.transmissions += 1;
        s.ledger.transmissions_per_block[st.block_id] += 1;
        if (s.ledger.block_status.count(st.block_id) &&
            s.ledger.block_status[st.block_id] == BlockStatus::pending) {
            s.ledger.block_status[st.block_id] = BlockStatus::sent;
        }
        label_step(s, 6, "migration-key");
    }
}

void Engine::handle_timeout(DataNode& node, RequestId rid) {
    auto it = node.pending.find(rid);
    if (it == node.pending.end()) return;  // acked or alerted; stale timer
    RetransmitState& st = it->second;
    if (net_.now() < st.timer_deadline) return;  // superseded by a newer timer

    if (st.attempt <= cfg_.protocol.max_ret) {
        st.attempt += 1;
        send_data_msg(node, st, true);
        return;
    }

    // retransmission budget exhausted: alert the source administrator and
    // keep the block; the request id is closed so late request retries
    // cannot restart the stream
    raise_alert(node.cloud_id, AlertKind::source_max_retransmit, rid);
    auto sit = sessions_.find(st.session);
    if (sit != sessions_.end()) {
        sit->second.ledger.block_status[st.block_id] = BlockStatus::failed_alerted;
    }
    node.completed_requests.insert(rid);
    node.pending.erase(it);
}

void Engine::handle_data(DataNode& node, const wire::DataMsg& msg, const NodeAddress& from) {
    const RequestId rid = msg.body.request_id;
    trace_.add(net_.now(), node.address, EventKind::data_delivered, rid,
               "attempt=" + std::to_string(msg.body.attempt));

    auto sit = sessions_.find(msg.session);

    // duplicate of a completed transfer: drop the payload, repeat the ack,
    // count it, and alert once the count reaches the retransmission bound
    auto cached = node.cached_acks.find(rid);
    if (cached != node.cached_acks.end()) {
        std::uint32_t dups = ++node.duplicate_counts[rid];
        if (sit != sessions_.end()) sit->second.ledger.duplicates += 1;
        trace_.add(net_.now(), node.address, EventKind::duplicate_dropped, rid,
                   "count=" + std::to_string(dups));
        net_.send(node.address, from, cached->second);
        trace_.add(net_.now(), node.address, EventKind::ack_resent, rid, "");
        if (dups >= cfg_.protocol.max_ret && !node.dup_alerted.count(rid)) {
            node.dup_alerted.insert(rid);
            raise_alert(node.cloud_id, AlertKind::target_duplicate_flood, rid);
        }
        return;
    }

    const MigrationKey* key = datanode_session_key(node, msg.session);
    if (!key) {
        trace_.add(net_.now(), node.address, EventKind::security_event, rid,
                   "data for unknown session");
        return;
    }
    auto sealed_digest = crypto::open(view(key->material), msg.body.sealed_hash,
                                      aad_for(Domain::data_hash, msg.session));
    if (!sealed_digest || sealed_digest->size() != crypto::kDigestSize) {
        trace_.add(net_.now(), node.address, EventKind::security_event, rid,
                   "sealed hash did not authenticate");
        return;
    }
    crypto::Digest computed = crypto::hash_digest(view(msg.body.data), view(msg.body.nonce));
    if (!std::equal(computed.bytes.begin(), computed.bytes.end(), sealed_digest->begin())) {
        trace_.add(net_.now(), node.address, EventKind::hash_mismatch, rid,
                   "integrity check failed");
        return;
    }

    // first valid delivery: store exactly once and acknowledge
    DataBlock block;
    block.id = msg.body.block_id;
    block.payload = msg.body.data;
    block.owner_encrypted = sit != sessions_.end() && sit->second.file_owner_encrypted;
    node.blocks[block.id] = std::move(block);
    trace_.add(net_.now(), node.address, EventKind::block_stored, rid,
               "block=" + msg.body.block_id.to_string());

    wire::AckMsg ack;
    ack.session = msg.session;
    ack.body.request_id = rid;
    ack.body.sealed_receipt =
        crypto::seal(view(key->material), view(make_receipt(computed, msg.body.block_id, rid)),
                     aad_for(Domain::ack_receipt, msg.session), rng_);
    Bytes ack_bytes = wire::encode(ack);
    node.cached_acks[rid] = ack_bytes;
    node.duplicate_counts[rid] = 0;
    net_.send(node.address, from, ack_bytes);
    trace_.add(net_.now(), node.address, EventKind::ack_sent, rid, "");
    if (sit != sessions_.end()) label_step(sit->second, 8, "migration-key");

    // let the scheduler at the name node start the next block
    wire::BlockStoredNote note;
    note.session = msg.session;
    note.request_id = rid;
    note.block_id = msg.body.block_id;
    note.block_bytes = msg.body.data.size();
    net_.send(node.address, name_node_address(node.cloud_id), wire::encode(note));
}

void Engine::handle_ack(DataNode& node, const wire::AckMsg& msg) {
    const RequestId rid = msg.body.request_id;
    auto it = node.pending.find(rid);
    if (it == node.pending.end()) {
        if (node.completed_requests.count(rid)) {
            trace_.add(net_.now(), node.address, EventKind::stale_ack_dropped, rid, "");
        } else {
            trace_.add(net_.now(), node.address, EventKind::security_event, rid,
                       "ack for unknown request");
        }
        return;
    }
    RetransmitState& st = it->second;
    const MigrationKey* key = datanode_session_key(node, msg.session);
    if (!key) {
        trace_.add(net_.now(), node.address, EventKind::ack_rejected, rid, "unknown session");
        return;
    }
    auto plain = crypto::open(view(key->material), msg.body.sealed_receipt,
                              aad_for(Domain::ack_receipt, msg.session));
    auto receipt = plain ? parse_receipt(view(*plain)) : std::nullopt;
    if (!receipt) {
        trace_.add(net_.now(), node.address, EventKind::ack_rejected, rid,
                   "receipt did not authenticate");
        trace_.add(net_.now(), node.address, EventKind::security_event, rid,
                   "forged or corrupted acknowledgment");
        return;
    }
    if (receipt->rid != st.request_id || receipt->block != st.block_id ||
        receipt->digest != st.digest) {
        trace_.add(net_.now(), node.address, EventKind::ack_rejected, rid,
                   "receipt does not match pending transfer");
        return;
    }

    VerifiedAckEvidence evidence;
    evidence.request_id = rid;
    evidence.block_id = st.block_id;
    evidence.digest = st.digest;
    node.verified_acks[rid] = evidence;
    trace_.add(net_.now(), node.address, EventKind::ack_verified, rid, "");

    delete_block(node, st.block_id, evidence);
    trace_.add(net_.now(), node.address, EventKind::block_deleted, rid,
               "block=" + st.block_id.to_string());
    node.completed_requests.insert(rid);
    BlockId block = st.block_id;
    SessionId sid = st.session;
    node.pending.erase(it);

    auto sit = sessions_.find(sid);
    if (sit != sessions_.end()) {
        sit->second.ledger.block_status[block] = BlockStatus::acked_deleted;
        note_block_deleted(sit->second, block);
    }
}

void Engine::note_block_deleted(MigrationSession& s, const BlockId&) {
    if (s.completed || !s.ledger.all_deleted()) return;
    s.completed = true;
    Cluster& source = clusters_.at(s.source);
    trace_.add(net_.now(), source.name_node.address, EventKind::migration_completed, std::nullopt,
               "file=" + s.file_id);
    // every block is gone from this cloud; retire the metadata entry too
    if (source.name_node.files.erase(s.file_id) > 0) {
        trace_.add(net_.now(), source.name_node.address, EventKind::file_metadata_removed,
                   std::nullopt, "file=" + s.file_id);
    }
}

void Engine::raise_alert(const CloudId& cloud, AlertKind kind, RequestId rid) {
    AdminAlert alert;
    alert.cloud_id = cloud;
    alert.kind = kind;
    alert.request_id = rid;
    alert.sim_time = net_.now();
    alerts_.push_back(alert);
    trace_.add(net_.now(), name_node_address(cloud),
               kind == AlertKind::source_max_retransmit
                   ? EventKind::alert_source_max_retransmit
                   : EventKind::alert_target_duplicate_flood,
               rid, "");
    for (auto& [sid, s] : sessions_) {
        if (s.request_blocks.count(rid)) {
            s.ledger.alerts += 1;
            break;
        }
    }
}

void Engine::label_step(MigrationSession& s, int step, const std::string& label) {
    s.ledger.protection_labels.emplace(step, label);
}

void Engine::check_custody() {
    for (auto& [sid, s] : sessions_) {
        if (s.ledger.block_status.empty()) continue;
        const Cluster& source = clusters_.at(s.source);
        const Cluster& target = clusters_.at(s.target);
        for (const auto& [block, status] : s.ledger.block_status) {
            bool at_source = source.node_holding(block) != nullptr;
            bool at_target = target.node_holding(block) != nullptr;
            if (!at_source && !at_target) {
                ++custody_violations_;
                trace_.add(net_.now(), "engine", EventKind::security_event, std::nullopt,
                           "custody violation block=" + block.to_string());
            }
        }
    }
}

void Engine::add_attacker_node(const NodeAddress& addr) {
    net_.add_node(addr);
    actors_[addr] = ActorRef{ActorRef::Role::attacker, "", 0};
    attacker_inboxes_[addr] = {};
    for (const auto& [cid, cluster] : clusters_) {
        for (const DataNode& dn : cluster.data_nodes) {
            net_.add_link(addr, dn.address, cfg_.data_link);
        }
        net_.add_link(addr, cluster.name_node.address, cfg_.control_link);
    }
}

const std::vector<Bytes>& Engine::attacker_inbox(const NodeAddress& addr) const {
    return attacker_inboxes_.at(addr);
}

}  // namespace migsim
