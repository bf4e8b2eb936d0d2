#include "migsim/netsim.hpp"

#include <algorithm>

namespace migsim {

void Network::add_node(const NodeAddress& addr) { nodes_[addr] = true; }

bool Network::has_node(const NodeAddress& addr) const { return nodes_.count(addr) > 0; }

Network::LinkKey Network::key_for(const NodeAddress& a, const NodeAddress& b) {
    return a < b ? LinkKey{a, b} : LinkKey{b, a};
}

void Network::add_link(const NodeAddress& a, const NodeAddress& b, const LinkModel& model) {
    add_node(a);
    add_node(b);
    links_[key_for(a, b)] = Link{model, 0, nullptr};
}

Network::Link& Network::link_for(const NodeAddress& a, const NodeAddress& b) {
    auto it = links_.find(key_for(a, b));
    if (it == links_.end()) throw UnknownLinkError(a, b);
    return it->second;
}

const LinkModel& Network::link_model(const NodeAddress& a, const NodeAddress& b) const {
    auto it = links_.find(key_for(a, b));
    if (it == links_.end()) throw UnknownLinkError(a, b);
    return it->second.model;
}

SimTime Network::transmission_time(const LinkModel& m, std::uint64_t size) const {
    // integer ns: size * 8e9 / rate, exact via 128-bit intermediate
    unsigned __int128 bits_ns = static_cast<unsigned __int128>(size) * 8u * 1'000'000'000u;
    return static_cast<SimTime>(bits_ns / m.rate_bps);
}

void Network::enqueue_delivery(Envelope env, Link& link, bool count_duplicate) {
    SimTime start = std::max(env.send_time, link.busy_until);
    SimTime ser = transmission_time(link.model, env.size);
    link.busy_until = start + ser;
    env.deliver_at = start + ser + link.model.latency;
    env.seq = next_seq_++;

    SimEvent ev;
    ev.time = env.deliver_at;
    ev.seq = env.seq;
    ev.delivery = std::move(env);
    queue_.push(std::move(ev));
    ++in_flight_;
    if (count_duplicate) ++duplicates_;
}

void Network::send(const NodeAddress& src, const NodeAddress& dst, Bytes payload,
                   std::uint64_t size_override) {
    Link& link = link_for(src, dst);
    ++sends_;

    Envelope env;
    env.src = src;
    env.dst = dst;
    env.size = size_override ? size_override : payload.size();
    env.payload = std::move(payload);
    env.send_time = now_;

    // Adversary interposition runs before chance. An active verdict (drop,
    // modify, redirect) supersedes the loss/duplication draws; a pass falls
    // through to normal link behavior so a pass-through hook is an identity.
    if (link.hook) {
        Verdict v = link.hook->on_envelope(env, *this);
        switch (v.action) {
            case Verdict::Action::drop:
                ++drops_;
                return;
            case Verdict::Action::modify:
                env.payload = std::move(v.modified_payload);
                env.size = env.payload.size();
                enqueue_delivery(std::move(env), link, false);
                return;
            case Verdict::Action::redirect: {
                env.dst = v.redirect_to;
                Link& redirected = link_for(env.src, env.dst);
                enqueue_delivery(std::move(env), redirected, false);
                return;
            }
            case Verdict::Action::pass:
                break;
        }
    }

    if (link.model.loss_prob > 0.0 && rng_->chance(link.model.loss_prob)) {
        ++drops_;
        return;
    }
    bool duplicate = link.model.dup_prob > 0.0 && rng_->chance(link.model.dup_prob);
    Envelope copy;
    if (duplicate) copy = env;
    enqueue_delivery(std::move(env), link, false);
    if (duplicate) enqueue_delivery(std::move(copy), link, true);
}

void Network::inject(const NodeAddress& src, const NodeAddress& dst, Bytes payload,
                     std::uint64_t size_override) {
    Link& link = link_for(src, dst);
    ++sends_;
    Envelope env;
    env.src = src;
    env.dst = dst;
    env.size = size_override ? size_override : payload.size();
    env.payload = std::move(payload);
    env.send_time = now_;
    enqueue_delivery(std::move(env), link, false);
}

void Network::schedule_timer(const NodeAddress& owner, std::uint64_t kind, RequestId rid,
                             SessionId session, SimTime at) {
    SimEvent ev;
    ev.time = std::max(at, now_);
    ev.seq = next_seq_++;
    ev.timer = TimerEvent{owner, kind, rid, session};
    queue_.push(std::move(ev));
}

void Network::interpose(const NodeAddress& a, const NodeAddress& b,
                        std::shared_ptr<AdversaryHook> hook) {
    Link& link = link_for(a, b);
    if (link.hook) throw HookAlreadyInstalledError();
    link.hook = std::move(hook);
}

std::optional<SimEvent> Network::step() {
    if (queue_.empty()) return std::nullopt;
    SimEvent ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    if (ev.delivery) {
        --in_flight_;
        ++deliveries_;
    }
    return ev;
}

}  // namespace migsim
