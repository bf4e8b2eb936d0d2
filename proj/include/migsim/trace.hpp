#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/sim_time.hpp"

namespace migsim {

enum class EventKind {
    setup_sent,
    setup_ok,
    setup_failed,
    setup_commit,
    setup_abort,
    session_established,
    migrate_requested,
    migration_rejected,
    metadata_sent,
    metadata_opened,
    metadata_rejected,
    migration_aborted,
    tokens_issued,
    token_delivered,
    block_started,
    read_request_sent,
    read_request_ignored,
    token_rejected,
    token_expired,
    read_rejected,
    data_sent,
    data_retransmit,
    data_delivered,
    hash_mismatch,
    duplicate_dropped,
    block_stored,
    ack_sent,
    ack_resent,
    ack_verified,
    ack_rejected,
    stale_ack_dropped,
    block_deleted,
    alert_source_max_retransmit,
    alert_target_duplicate_flood,
    file_metadata_removed,
    target_file_complete,
    migration_completed,
    security_event,
};

const char* to_string(EventKind k);

struct TraceEvent {
    SimTime t = 0;
    std::uint64_t seq = 0;
    std::string actor;
    EventKind kind = EventKind::security_event;
    std::optional<RequestId> request_id;
    std::string detail;
};

/// Append-only protocol event log; dispatch order is the canonical order,
/// so equal seeds produce byte-identical exports.
class Trace {
public:
    void add(SimTime t, const std::string& actor, EventKind kind,
             std::optional<RequestId> rid = std::nullopt, std::string detail = {});

    const std::vector<TraceEvent>& events() const { return events_; }
    std::size_t count(EventKind kind) const;
    bool contains(EventKind kind) const { return count(kind) > 0; }

    /// Line-delimited JSON, one record per event.
    std::string to_jsonl() const;

private:
    std::vector<TraceEvent> events_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace migsim
