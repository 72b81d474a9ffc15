#include "qnsim/net/entdist.hpp"

#include <algorithm>

namespace qnsim::net {

void EntDist::set_timeout(double multiplier, TimeoutPolicy policy) {
    if (multiplier <= 0) throw SetupError("watchdog multiplier must be positive");
    timeout_mult_ = multiplier;
    timeout_policy_ = policy;
}

void EntDist::register_node(int node_id, mem::QuantumMemory* qmem,
                            std::vector<int> phys_to_backend) {
    if (qmem == nullptr) throw InternalError("EntDist: null quantum memory");
    if (static_cast<int>(phys_to_backend.size()) != qmem->num_phys())
        throw InternalError("EntDist: backend map size mismatch");
    ports_[node_id] = NodePort{qmem, std::move(phys_to_backend)};
}

void EntDist::set_link(int node_a, int node_b, const ehi::LinkInfo& link) {
    if (link.epr_duration <= 0) throw SetupError("link pair duration must be positive");
    links_[std::minmax(node_a, node_b)] = link;
}

void EntDist::register_session(int node_a, int pid_a, int socket_a, int node_b, int pid_b,
                               int socket_b) {
    SessionKey key = SessionKey::make(node_a, pid_a, node_b, pid_b);
    if (!ports_.count(key.node_a) || !ports_.count(key.node_b))
        throw SetupError("session between unregistered nodes " + key.to_string());
    link_of(key); // throws when the nodes have no link
    if (sessions_.count(key)) throw SetupError("session registered twice: " + key.to_string());
    auto side_a = std::make_tuple(node_a, pid_a, socket_a);
    auto side_b = std::make_tuple(node_b, pid_b, socket_b);
    if (side_index_.count(side_a) || side_index_.count(side_b))
        throw SetupError("pair socket already bound to a session: " + key.to_string());
    Session st;
    st.key = key;
    sessions_[key] = std::move(st);
    side_index_[side_a] = key;
    side_index_[side_b] = key;
}

EntDist::Session& EntDist::session_of(int node, int pid, int socket) {
    auto it = side_index_.find({node, pid, socket});
    if (it == side_index_.end())
        throw SetupError("no session registered for node " + std::to_string(node) +
                         " instance " + std::to_string(pid) + " pair socket " +
                         std::to_string(socket));
    return sessions_.at(it->second);
}

const ehi::LinkInfo& EntDist::link_of(const SessionKey& k) const {
    auto it = links_.find({k.node_a, k.node_b});
    if (it == links_.end())
        throw SetupError("no entanglement link between nodes " + std::to_string(k.node_a) +
                         " and " + std::to_string(k.node_b));
    return it->second;
}

void EntDist::submit(EprRequest req) {
    if (req.rr == nullptr || !req.on_done) throw InternalError("incomplete pair request");
    Session& st = session_of(req.node, req.pid, req.rr->epr_socket);
    const bool is_a = req.node == st.key.node_a && req.pid == st.key.pid_a;
    bool& present = is_a ? st.a_present : st.b_present;
    if (present)
        throw InternalError("duplicate pair request from node " + std::to_string(req.node) +
                            " instance " + std::to_string(req.pid));
    (is_a ? st.a : st.b) = std::move(req);
    present = true;

    if (st.a_present && st.b_present) {
        const lang::RequestRoutine& ra = *st.a.rr;
        const lang::RequestRoutine& rb = *st.b.rr;
        if (ra.concrete_pairs() != rb.concrete_pairs())
            throw SetupError("session " + st.key.to_string() + ": pair counts disagree");
        if (ra.typ != rb.typ)
            throw SetupError("session " + st.key.to_string() + ": request types disagree");
        if (ra.role == rb.role)
            throw SetupError("session " + st.key.to_string() +
                             ": both sides claim the same role");
        st.num_pairs = ra.concrete_pairs();
        st.next_pair = 0;
        arm_watchdog(st);
    }
    try_advance(st);
}

void EntDist::arm_watchdog(Session& st) {
    const u64 gen = ++st.watchdog_gen;
    const time_ns wait =
        static_cast<time_ns>(timeout_mult_ * static_cast<double>(link_of(st.key).epr_duration));
    const SessionKey key = st.key;
    eq_.in(wait, sim::Signal::Effect, [this, key, gen] {
        Session& s = sessions_.at(key);
        if (s.watchdog_gen != gen || !s.a_present || !s.b_present) return;
        if (timeout_policy_ == TimeoutPolicy::Abort)
            throw ExecError("entanglement session " + key.to_string() +
                            " made no progress before its watchdog expired");
        ++timeouts_;
        arm_watchdog(s);
        try_advance(s);
    });
}

void EntDist::poke() {
    for (auto& [key, st] : sessions_) try_advance(st);
}

void EntDist::try_advance(Session& st) {
    if (!st.a_present || !st.b_present || st.generating) return;
    const time_ns now = eq_.now();
    if (!sched_.allows(now, st.key)) {
        if (!st.slot_armed) {
            st.slot_armed = true;
            const SessionKey key = st.key;
            eq_.at(sched_.next_start(now, st.key), sim::Signal::SlotStart, [this, key] {
                Session& s = sessions_.at(key);
                s.slot_armed = false;
                try_advance(s);
            });
        }
        return;
    }

    NodePort& pa = ports_.at(st.key.node_a);
    NodePort& pb = ports_.at(st.key.node_b);
    const int va = static_cast<int>(st.a.rr->virt_ids.id_for_pair(st.next_pair));
    const int vb = static_cast<int>(st.b.rr->virt_ids.id_for_pair(st.next_pair));
    // The landing qubit must be free on both sides; otherwise wait for a poke.
    if (pa.qmem->phys_of(st.key.pid_a, va) || !pa.qmem->can_allocate(st.key.pid_a, {va})) return;
    if (pb.qmem->phys_of(st.key.pid_b, vb) || !pb.qmem->can_allocate(st.key.pid_b, {vb})) return;
    const int phys_a = pa.qmem->allocate(st.key.pid_a, va);
    const int phys_b = pb.qmem->allocate(st.key.pid_b, vb);

    starts_.push_back(StartRecord{now, st.key, st.next_pair});
    st.generating = true;
    const SessionKey key = st.key;
    eq_.in(link_of(st.key).epr_duration, sim::Signal::Effect,
           [this, key, phys_a, phys_b] { deliver(key, phys_a, phys_b); });
}

void EntDist::deliver(const SessionKey& key, int phys_a, int phys_b) {
    Session& st = sessions_.at(key);
    const time_ns now = eq_.now();
    NodePort& pa = ports_.at(key.node_a);
    NodePort& pb = ports_.at(key.node_b);
    const int ba = pa.phys_to_backend.at(static_cast<size_t>(phys_a));
    const int bb = pb.phys_to_backend.at(static_cast<size_t>(phys_b));

    backend_.discard(ba, now);
    backend_.discard(bb, now);
    backend_.create_werner_pair(ba, bb, link_of(key).fidelity, now);
    ++pairs_delivered_;

    PairEvent ea{st.next_pair, -1, now};
    PairEvent eb{st.next_pair, -1, now};
    switch (st.a.rr->typ) {
    case lang::RequestType::CreateKeep:
        break;
    case lang::RequestType::MeasureDirectly: {
        ea.outcome = backend_.measure(ba, qsim::Basis::Z, now, rng_);
        eb.outcome = backend_.measure(bb, qsim::Basis::Z, now, rng_);
        const int va = static_cast<int>(st.a.rr->virt_ids.id_for_pair(st.next_pair));
        const int vb = static_cast<int>(st.b.rr->virt_ids.id_for_pair(st.next_pair));
        pa.qmem->free(key.pid_a, va);
        pb.qmem->free(key.pid_b, vb);
        break;
    }
    case lang::RequestType::RemoteStatePrep: {
        const bool a_creates = st.a.rr->role == lang::RequestRole::Create;
        EprRequest& creator = a_creates ? st.a : st.b;
        PairEvent& ev = a_creates ? ea : eb;
        NodePort& port = a_creates ? pa : pb;
        const int bq = a_creates ? ba : bb;
        const int pid = a_creates ? key.pid_a : key.pid_b;
        ev.outcome = backend_.measure(bq, qsim::Basis::X, now, rng_);
        port.qmem->free(pid, static_cast<int>(creator.rr->virt_ids.id_for_pair(st.next_pair)));
        break;
    }
    }

    if (st.a.on_pair) st.a.on_pair(ea);
    if (st.b.on_pair) st.b.on_pair(eb);

    ++st.next_pair;
    st.generating = false;
    if (st.next_pair == st.num_pairs) {
        auto done_a = std::move(st.a.on_done);
        auto done_b = std::move(st.b.on_done);
        ++st.watchdog_gen; // disarm
        st.a_present = st.b_present = false;
        st.a = EprRequest{};
        st.b = EprRequest{};
        st.next_pair = 0;
        done_a(now);
        done_b(now);
    } else {
        try_advance(st);
    }
}

} // namespace qnsim::net
