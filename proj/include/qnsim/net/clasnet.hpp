#pragma once
// Classical messaging between paired program instances.
//
// Each route connects one (node, instance, socket) endpoint to its peer with
// a fixed latency. A send enqueues every payload element into the peer's
// FIFO inbox after that latency; receives pop one element at a time.

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/sim/event_queue.hpp"

namespace qnsim::net {

struct Endpoint {
    int node = -1;
    int pid = -1;
    int socket = -1;

    bool operator<(const Endpoint& o) const;
    std::string to_string() const;
};

class ClassicalNetwork {
public:
    explicit ClassicalNetwork(sim::EventQueue& eq) : eq_(eq) {}

    // Bidirectional; each endpoint may appear in at most one route.
    void add_route(Endpoint a, Endpoint b, time_ns latency);

    // Called when a delivery lands, with the receiving endpoint.
    void set_on_arrival(std::function<void(const Endpoint&)> fn) { on_arrival_ = std::move(fn); }

    // Delivers every element of `payload` to the peer inbox at now+latency.
    void send(const Endpoint& from, const std::vector<i32>& payload);

    std::optional<i32> try_recv(const Endpoint& at);

    size_t inbox_size(const Endpoint& at) const;
    u64 messages_sent() const { return messages_sent_; }

private:
    struct Route {
        Endpoint peer;
        time_ns latency = 0;
    };

    sim::EventQueue& eq_;
    std::map<Endpoint, Route> routes_;
    std::map<Endpoint, std::deque<i32>> inboxes_;
    std::function<void(const Endpoint&)> on_arrival_;
    u64 messages_sent_ = 0;
};

} // namespace qnsim::net
