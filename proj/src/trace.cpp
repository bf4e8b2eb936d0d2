#include "migsim/trace.hpp"

#include <json.hpp>

namespace migsim {

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::setup_sent: return "setup_sent";
        case EventKind::setup_ok: return "setup_ok";
        case EventKind::setup_failed: return "setup_failed";
        case EventKind::setup_commit: return "setup_commit";
        case EventKind::setup_abort: return "setup_abort";
        case EventKind::session_established: return "session_established";
        case EventKind::migrate_requested: return "migrate_requested";
        case EventKind::migration_rejected: return "migration_rejected";
        case EventKind::metadata_sent: return "metadata_sent";
        case EventKind::metadata_opened: return "metadata_opened";
        case EventKind::metadata_rejected: return "metadata_rejected";
        case EventKind::migration_aborted: return "migration_aborted";
        case EventKind::tokens_issued: return "tokens_issued";
        case EventKind::token_delivered: return "token_delivered";
        case EventKind::block_started: return "block_started";
        case EventKind::read_request_sent: return "read_request_sent";
        case EventKind::read_request_ignored: return "read_request_ignored";
        case EventKind::token_rejected: return "token_rejected";
        case EventKind::token_expired: return "token_expired";
        case EventKind::read_rejected: return "read_rejected";
        case EventKind::data_sent: return "data_sent";
        case EventKind::data_retransmit: return "data_retransmit";
        case EventKind::data_delivered: return "data_delivered";
        case EventKind::hash_mismatch: return "hash_mismatch";
        case EventKind::duplicate_dropped: return "duplicate_dropped";
        case EventKind::block_stored: return "block_stored";
        case EventKind::ack_sent: return "ack_sent";
        case EventKind::ack_resent: return "ack_resent";
        case EventKind::ack_verified: return "ack_verified";
        case EventKind::ack_rejected: return "ack_rejected";
        case EventKind::stale_ack_dropped: return "stale_ack_dropped";
        case EventKind::block_deleted: return "block_deleted";
        case EventKind::alert_source_max_retransmit: return "alert_source_max_retransmit";
        case EventKind::alert_target_duplicate_flood: return "alert_target_duplicate_flood";
        case EventKind::file_metadata_removed: return "file_metadata_removed";
        case EventKind::target_file_complete: return "target_file_complete";
        case EventKind::migration_completed: return "migration_completed";
        case EventKind::security_event: return "security_event";
    }
    return "unknown";
}

void Trace::add(SimTime t, const std::string& actor, EventKind kind,
                std::optional<RequestId> rid, std::string detail) {
    TraceEvent ev;
    ev.t = t;
    ev.seq = next_seq_++;
    ev.actor = actor;
    ev.kind = kind;
    ev.request_id = rid;
    ev.detail = std::move(detail);
    events_.push_back(std::move(ev));
}

std::size_t Trace::count(EventKind kind) const {
    std::size_t n = 0;
    for (const auto& ev : events_) {
        if (ev.kind == kind) ++n;
    }
    return n;
}

std::string Trace::to_jsonl() const {
    std::string out;
    for (const auto& ev : events_) {
        nlohmann::ordered_json j;
        j["t"] = ev.t;
        j["seq"] = ev.seq;
        j["actor"] = ev.actor;
        j["kind"] = to_string(ev.kind);
        if (ev.request_id) j["request_id"] = *ev.request_id;
        if (!ev.detail.empty()) j["detail"] = ev.detail;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace migsim
