#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/rng.hpp"
#include "migsim/sim_time.hpp"

namespace migsim {

class UnknownLinkError : public std::runtime_error {
public:
    UnknownLinkError(const NodeAddress& a, const NodeAddress& b)
        : std::runtime_error("unknown link: " + a + " <-> " + b) {}
};
class HookAlreadyInstalledError : public std::runtime_error {
public:
    HookAlreadyInstalledError() : std::runtime_error("hook already installed on link") {}
};

struct LinkModel {
    std::uint64_t rate_bps = 64'000'000;
    SimTime latency = 0;
    double loss_prob = 0.0;
    double dup_prob = 0.0;
};

struct Envelope {
    std::uint64_t seq = 0;
    NodeAddress src;
    NodeAddress dst;
    Bytes payload;
    std::uint64_t size = 0;  // wire bytes; may exceed payload.size() for modeled bulk
    SimTime send_time = 0;
    SimTime deliver_at = 0;
};

struct TimerEvent {
    NodeAddress owner;
    std::uint64_t kind = 0;
    RequestId request_id = 0;
    SessionId session = 0;
};

struct SimEvent {
    SimTime time = 0;
    std::uint64_t seq = 0;
    // exactly one of the two is set
    std::optional<Envelope> delivery;
    std::optional<TimerEvent> timer;
};

/// What an interposed adversary decides about one envelope it controls.
struct Verdict {
    enum class Action { pass, drop, modify, redirect };
    Action action = Action::pass;
    Bytes modified_payload;   // for modify
    NodeAddress redirect_to;  // for redirect
};

class Network;

/// Dolev-Yao interposition point: sees every envelope on its link before
/// loss/duplication draws, and may inject extra envelopes via the network.
class AdversaryHook {
public:
    virtual ~AdversaryHook() = default;
    virtual Verdict on_envelope(const Envelope& env, Network& net) = 0;
};

/// Deterministic event queue plus point-to-point links with per-link rate,
/// latency, loss and duplication. Single-threaded; ties dispatch in enqueue
/// order so a seed fixes the total event order.
class Network {
public:
    explicit Network(DetRng& rng) : rng_(&rng) {}

    void add_node(const NodeAddress& addr);
    bool has_node(const NodeAddress& addr) const;
    void add_link(const NodeAddress& a, const NodeAddress& b, const LinkModel& model);
    const LinkModel& link_model(const NodeAddress& a, const NodeAddress& b) const;

    /// Enqueues a delivery unless an adversary or the loss draw kills it.
    void send(const NodeAddress& src, const NodeAddress& dst, Bytes payload,
              std::uint64_t size_override = 0);

    /// Adversary-originated envelope: skips hook and loss/dup processing.
    void inject(const NodeAddress& src, const NodeAddress& dst, Bytes payload,
                std::uint64_t size_override = 0);

    void schedule_timer(const NodeAddress& owner, std::uint64_t kind, RequestId rid,
                        SessionId session, SimTime at);

    void interpose(const NodeAddress& a, const NodeAddress& b,
                   std::shared_ptr<AdversaryHook> hook);

    /// Pops the earliest pending event and advances the clock; nullopt = idle.
    std::optional<SimEvent> step();

    SimTime now() const { return now_; }
    bool idle() const { return queue_.empty(); }

    // conservation counters
    std::uint64_t sends() const { return sends_; }
    std::uint64_t deliveries() const { return deliveries_; }
    std::uint64_t drops() const { return drops_; }
    std::uint64_t duplicates() const { return duplicates_; }
    std::uint64_t in_flight() const { return in_flight_; }

private:
    struct Link {
        LinkModel model;
        SimTime busy_until = 0;
        std::shared_ptr<AdversaryHook> hook;
    };
    using LinkKey = std::pair<NodeAddress, NodeAddress>;  // normalized (min, max)

    static LinkKey key_for(const NodeAddress& a, const NodeAddress& b);
    Link& link_for(const NodeAddress& a, const NodeAddress& b);
    void enqueue_delivery(Envelope env, Link& link, bool count_duplicate);
    SimTime transmission_time(const LinkModel& m, std::uint64_t size) const;

    DetRng* rng_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::map<NodeAddress, bool> nodes_;
    std::map<LinkKey, Link> links_;

    struct QueueCmp {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, QueueCmp> queue_;

    std::uint64_t sends_ = 0;
    std::uint64_t deliveries_ = 0;
    std::uint64_t drops_ = 0;
    std::uint64_t duplicates_ = 0;
    std::uint64_t in_flight_ = 0;
};

}  // namespace migsim
