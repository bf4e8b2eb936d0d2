#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/crypto.hpp"
#include "migsim/dfs.hpp"
#include "migsim/netsim.hpp"
#include "migsim/trace.hpp"
#include "migsim/wire.hpp"

namespace migsim {

class UnknownUserError : public std::runtime_error {
public:
    explicit UnknownUserError(const UserId& u) : std::runtime_error("unknown user: " + u) {}
};
class UnknownCloudError : public std::runtime_error {
public:
    explicit UnknownCloudError(const CloudId& c) : std::runtime_error("unknown cloud: " + c) {}
};
class SameCloudError : public std::runtime_error {
public:
    SameCloudError() : std::runtime_error("migration requires distinct clouds") {}
};
class UnknownSessionError : public std::runtime_error {
public:
    explicit UnknownSessionError(SessionId s)
        : std::runtime_error("unknown session: " + std::to_string(s)) {}
};
class UnknownFileError : public std::runtime_error {
public:
    explicit UnknownFileError(const FileId& f) : std::runtime_error("unknown file: " + f) {}
};

struct ProtocolConfig {
    std::uint32_t max_ret = 5;
    SimTime retransmit_timeout = 0;  // 0 = derive from the data link model
    std::uint32_t parallel_streams = 1;
    std::int64_t token_expiry_factor = 10;  // expiry = factor * retransmit_timeout
};

enum class AlertKind { source_max_retransmit, target_duplicate_flood };
const char* to_string(AlertKind k);

struct AdminAlert {
    CloudId cloud_id;
    AlertKind kind = AlertKind::source_max_retransmit;
    RequestId request_id = 0;
    SimTime sim_time = 0;
};

enum class BlockStatus { pending, sent, acked_deleted, failed_alerted };
const char* to_string(BlockStatus s);

/// Per-migration progress: block states plus the counters and the
/// protection label recorded for each externally visible protocol step.
struct MigrationLedger {
    std::map<BlockId, BlockStatus> block_status;
    std::map<BlockId, std::uint32_t> transmissions_per_block;
    std::uint64_t transmissions = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t alerts = 0;
    std::map<int, std::string> protection_labels;  // protocol step -> guarding key

    bool all_deleted() const;
    bool any_failed() const;
    std::size_t count(BlockStatus s) const;
};

struct MigrationSession {
    SessionId id = 0;
    UserId user;
    CloudId source;
    CloudId target;
    MigrationKey key;
    MigrationLedger ledger;
    bool established = false;
    bool setup_failed = false;
    bool aborted = false;
    bool completed = false;
    FileId file_id;
    bool file_owner_encrypted = false;
    // setup handshake state (user side)
    std::optional<bool> source_setup_ok;
    std::optional<bool> target_setup_ok;
    // target-side launch scheduling
    std::vector<RequestId> launch_order;
    std::size_t next_launch = 0;
    std::size_t target_stored = 0;
    std::map<RequestId, BlockId> request_blocks;
    std::map<RequestId, NodeAddress> request_source_nodes;
};

struct EngineConfig {
    std::uint64_t seed = 1;
    std::vector<CloudId> clouds = {"A", "B"};
    std::uint32_t data_nodes_per_cloud = 2;
    std::uint64_t block_size = 4096;
    LinkModel data_link;                   // inter-cloud data-node pairs
    LinkModel control_link{64'000'000, kMillisecond, 0.0, 0.0};
    LinkModel internal_link{1'000'000'000, kMicrosecond * 100, 0.0, 0.0};
    ProtocolConfig protocol;
    crypto::KdfParams kdf{8, 8, 1};
};

/// The simulation: clouds, network, user actor and the migration protocol
/// state machines, dispatched from one deterministic event loop.
class Engine {
public:
    explicit Engine(const EngineConfig& cfg);

    // --- setup of the world ---
    Cluster& cloud(const CloudId& id);
    const Cluster& cloud(const CloudId& id) const;
    void register_user(const UserId& user, const std::map<CloudId, Credentials>& creds);
    MetadataRecord store_file(const CloudId& cloud, const FileId& file, ByteView payload,
                              bool owner_encrypted);

    // --- protocol operations ---
    /// Fresh session with a new migration key and an empty ledger. Throws
    /// UnknownUserError / UnknownCloudError / SameCloudError.
    MigrationSession& new_migration_session(const UserId& user, const CloudId& source,
                                            const CloudId& target);
    /// Sends the credential-wrapped key to both clouds (asynchronous; run()
    /// drives it to completion).
    void start_key_setup(SessionId session);
    /// User trigger: asks the source cloud to migrate the file. Throws
    /// UnknownSessionError. Unknown files are rejected by the source cloud
    /// during the run (migration_rejected in the trace).
    void request_migration(SessionId session, const FileId& file);

    // --- event loop ---
    bool step();      // one event; false when idle
    void run();       // until idle
    void run_setup(SessionId session);  // convenience: start_key_setup + run

    // --- observation ---
    MigrationSession& session(SessionId id);
    const MigrationSession& session(SessionId id) const;
    bool session_established(SessionId id) const;
    const std::vector<AdminAlert>& alerts() const { return alerts_; }
    Trace& trace() { return trace_; }
    const Trace& trace() const { return trace_; }
    Network& network() { return net_; }
    DetRng& rng() { return rng_; }
    const EngineConfig& config() const { return cfg_; }
    SimTime retransmit_timeout() const { return retransmit_timeout_; }

    std::uint64_t custody_violations() const { return custody_violations_; }
    bool custody_ok() const { return custody_violations_ == 0; }

    NodeAddress name_node_address(const CloudId& c) const { return c + "/nn"; }
    NodeAddress data_node_address(const CloudId& c, std::uint32_t i) const {
        return c + "/dn" + std::to_string(i);
    }
    NodeAddress user_address() const { return "user"; }

    /// Registers an extra addressable endpoint (adversary use). Links it to
    /// every data node with the data-link model.
    void add_attacker_node(const NodeAddress& addr);
    /// Payloads delivered to an attacker endpoint, in arrival order.
    const std::vector<Bytes>& attacker_inbox(const NodeAddress& addr) const;

    // --- direct state-machine entry points (also used by tests) ---
    void handle_read_request(DataNode& node, const wire::ReadRequest& msg);
    void handle_data(DataNode& node, const wire::DataMsg& msg, const NodeAddress& from);
    void handle_ack(DataNode& node, const wire::AckMsg& msg);
    void handle_timeout(DataNode& node, RequestId rid);
    /// Target-side retry of an unanswered read request; gives up silently
    /// once the cached token expires.
    void handle_request_retry(DataNode& node, RequestId rid);
    /// Token minting for an opened metadata record at the target name node;
    /// returns the minted request ids in block order.
    std::vector<RequestId> issue_tokens(SessionId session, const MetadataRecord& md);

    // aad construction is shared with adversary knowledge derivation
    enum class Domain : std::uint8_t {
        key_wrap = 1,
        trigger,
        metadata,
        token,
        data_hash,
        ack_receipt,
        internal,
    };
    static Bytes aad_for(Domain d, SessionId session);

private:
    struct ActorRef {
        enum class Role { user, name_node, data_node, attacker } role = Role::user;
        CloudId cloud;
        std::uint32_t dn_index = 0;
    };

    void dispatch(const SimEvent& ev);
    void on_message(const NodeAddress& dst, const Envelope& env);
    void user_on_message(const wire::Message& msg, const Envelope& env);
    void namenode_on_message(Cluster& cluster, const wire::Message& msg, const Envelope& env);
    void datanode_on_message(Cluster& cluster, DataNode& node, const wire::Message& msg,
                             const Envelope& env);

    void finish_setup(MigrationSession& s);
    void start_migration_at_source(Cluster& source, const wire::MigrateRequest& msg);
    void target_on_metadata(Cluster& target, const wire::MetadataTransfer& msg);
    void launch_next_blocks(MigrationSession& s);
    void send_data_msg(DataNode& node, RetransmitState& st, bool retransmit);
    void note_block_deleted(MigrationSession& s, const BlockId& block);
    void check_custody();
    void raise_alert(const CloudId& cloud, AlertKind kind, RequestId rid);
    void label_step(MigrationSession& s, int step, const std::string& label);

    const MigrationKey* datanode_session_key(const DataNode& node, SessionId sid) const;

    EngineConfig cfg_;
    DetRng rng_;
    Network net_;
    Trace trace_;
    std::map<CloudId, Cluster> clusters_;
    std::map<UserId, std::map<CloudId, Credentials>> users_;  // user actor's secrets
    std::map<SessionId, MigrationSession> sessions_;
    std::map<NodeAddress, ActorRef> actors_;
    std::map<NodeAddress, std::vector<Bytes>> attacker_inboxes_;
    std::vector<AdminAlert> alerts_;
    SessionId next_session_ = 1;
    RequestId next_request_ = 1;
    std::uint64_t next_key_id_ = 1;
    SimTime retransmit_timeout_ = 0;
    std::uint64_t custody_violations_ = 0;

    static constexpr std::uint64_t kTimerRetransmit = 1;
    static constexpr std::uint64_t kTimerRequestRetry = 2;

    void send_read_request(DataNode& node, RequestId rid, SessionId sid, bool retry);
};

}  // namespace migsim
