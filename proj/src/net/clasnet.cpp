#include "qnsim/net/clasnet.hpp"

#include <sstream>
#include <tuple>

namespace qnsim::net {

bool Endpoint::operator<(const Endpoint& o) const {
    return std::tie(node, pid, socket) < std::tie(o.node, o.pid, o.socket);
}

std::string Endpoint::to_string() const {
    std::ostringstream os;
    os << "n" << node << ":p" << pid << ":s" << socket;
    return os.str();
}

void ClassicalNetwork::add_route(Endpoint a, Endpoint b, time_ns latency) {
    if (latency < 0) throw SetupError("classical route with negative latency");
    if (routes_.count(a) || routes_.count(b))
        throw SetupError("classical route endpoint wired twice: " + a.to_string() + " / " +
                         b.to_string());
    routes_[a] = Route{b, latency};
    routes_[b] = Route{a, latency};
}

void ClassicalNetwork::send(const Endpoint& from, const std::vector<i32>& payload) {
    auto it = routes_.find(from);
    if (it == routes_.end())
        throw ExecError("send on unconnected classical socket " + from.to_string());
    if (payload.empty()) throw InternalError("empty classical send");
    const Endpoint to = it->second.peer;
    ++messages_sent_;
    eq_.in(it->second.latency, sim::Signal::Effect, [this, to, payload] {
        auto& box = inboxes_[to];
        for (i32 v : payload) box.push_back(v);
        eq_.at(eq_.now(), sim::Signal::MessageArrived, [this, to] {
            if (on_arrival_) on_arrival_(to);
        });
    });
}

std::optional<i32> ClassicalNetwork::try_recv(const Endpoint& at) {
    auto it = inboxes_.find(at);
    if (it == inboxes_.end() || it->second.empty()) return std::nullopt;
    i32 v = it->second.front();
    it->second.pop_front();
    return v;
}

size_t ClassicalNetwork::inbox_size(const Endpoint& at) const {
    auto it = inboxes_.find(at);
    return it == inboxes_.end() ? 0 : it->second.size();
}

} // namespace qnsim::net
