#pragma once
// Entanglement distribution.
//
// Both instances of a session park their pair requests here. Generation of
// the next pair starts once (1) both sides' requests are present, (2) the
// network schedule admits the session at the current time, and (3) both
// sides can allocate the communication qubit the pair lands on. The pair
// materializes one link duration later as a Werner state; measure-directly
// requests are measured in Z on both sides on delivery and their qubits
// freed at once, remote-state-preparation requests are measured in X on the
// creator side only.
//
// A watchdog fires when a session sits incomplete for too long; it either
// re-arms (visible in the stats) or aborts the run.

#include <functional>
#include <map>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/mem/memory.hpp"
#include "qnsim/net/schedule.hpp"
#include "qnsim/qsim/backend.hpp"
#include "qnsim/sim/event_queue.hpp"

namespace qnsim::net {

enum class TimeoutPolicy { Retry, Abort };

struct PairEvent {
    int pair_index = -1;
    i32 outcome = -1; // measure-directly: own Z result; creator of an RSP: X result
    time_ns at = 0;
};

struct EprRequest {
    int node = -1;
    int pid = -1;
    const lang::RequestRoutine* rr = nullptr;
    std::function<void(const PairEvent&)> on_pair; // optional, per delivered pair
    std::function<void(time_ns)> on_done;          // all pairs delivered
};

class EntDist {
public:
    EntDist(sim::EventQueue& eq, qsim::Backend& backend, Rng& rng)
        : eq_(eq), backend_(backend), rng_(rng) {}

    void set_schedule(NetworkSchedule s) { sched_ = std::move(s); }
    void set_timeout(double multiplier, TimeoutPolicy policy);

    void register_node(int node_id, mem::QuantumMemory* qmem, std::vector<int> phys_to_backend);
    void set_link(int node_a, int node_b, const ehi::LinkInfo& link);
    // A session couples one pair socket of one instance to one pair socket of
    // a peer instance; an instance may hold several sessions on distinct
    // sockets (but at most one per peer instance).
    void register_session(int node_a, int pid_a, int socket_a, int node_b, int pid_b,
                          int socket_b);

    void submit(EprRequest req);

    // Re-examines blocked sessions; call after anything frees qubits.
    void poke();

    struct StartRecord {
        time_ns t;
        SessionKey session;
        int pair_index;
    };
    const std::vector<StartRecord>& starts() const { return starts_; }
    u64 pairs_delivered() const { return pairs_delivered_; }
    u64 timeouts() const { return timeouts_; }
    const NetworkSchedule& schedule() const { return sched_; }

private:
    struct NodePort {
        mem::QuantumMemory* qmem = nullptr;
        std::vector<int> phys_to_backend;
    };
    struct Session {
        SessionKey key;
        bool a_present = false, b_present = false;
        EprRequest a, b; // a = lower (node, pid) side
        int num_pairs = 0;
        int next_pair = 0;
        bool generating = false;
        bool slot_armed = false;
        u64 watchdog_gen = 0;
    };

    Session& session_of(int node, int pid, int socket);
    const ehi::LinkInfo& link_of(const SessionKey& k) const;
    void arm_watchdog(Session& st);
    void try_advance(Session& st);
    void deliver(const SessionKey& key, int phys_a, int phys_b);

    sim::EventQueue& eq_;
    qsim::Backend& backend_;
    Rng& rng_;
    NetworkSchedule sched_ = NetworkSchedule::free_mode();
    double timeout_mult_ = 100.0;
    TimeoutPolicy timeout_policy_ = TimeoutPolicy::Retry;

    std::map<int, NodePort> ports_;
    std::map<std::pair<int, int>, ehi::LinkInfo> links_; // normalized node pair
    std::map<SessionKey, Session> sessions_;
    std::map<std::tuple<int, int, int>, SessionKey> side_index_; // (node, pid, socket)

    std::vector<StartRecord> starts_;
    u64 pairs_delivered_ = 0;
    u64 timeouts_ = 0;
};

} // namespace qnsim::net
