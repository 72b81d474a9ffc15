#pragma once
// Whole-network simulation.
//
// One event queue drives every node's two processors, the entanglement
// distributor, classical messaging, and a single noisy quantum backend
// shared by all nodes (so cross-node pairs live in one state).
//
// Each node runs its instances' tasks on a classical processor (CPS) and a
// quantum processor (QPS). The CPS steps host blocks one instruction per
// host-latency and may be preempted between instructions under EDF; blocked
// receives park the task without consuming time. The QPS is non-preemptive:
// routines execute eagerly at dispatch (their quantum operations land at the
// proper absolute times) and entanglement tasks occupy it from dispatch
// until the last pair — with sequential callbacks run nested in between.
//
// Control flow: programs without branches get their entire task graph up
// front; branching programs grow block by block as each instance exhausts
// its tasks. With `linear_baseline`, every node's graph is chained into one
// serial order after all instances are added (requires branch-free
// programs).

#include <memory>
#include <string>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"
#include "qnsim/host/vm.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/mem/memory.hpp"
#include "qnsim/net/clasnet.hpp"
#include "qnsim/net/entdist.hpp"
#include "qnsim/net/schedule.hpp"
#include "qnsim/nqasm/vm.hpp"
#include "qnsim/qsim/backend.hpp"
#include "qnsim/sched/scheduler.hpp"
#include "qnsim/sim/event_queue.hpp"
#include "qnsim/task/graph.hpp"

namespace qnsim::sim {

struct SimConfig {
    sched::Policy policy = sched::Policy::Fcfs;
    bool linear_baseline = false;
    u64 seed = 1;
    net::NetworkSchedule schedule = net::NetworkSchedule::free_mode();
    double timeout_mult = 100.0;
    net::TimeoutPolicy timeout_policy = net::TimeoutPolicy::Retry;
    u64 max_events = 500'000'000;
    bool record_trace = false;
};

struct InstanceResult {
    int pid = -1;
    int node = -1;
    bool finished = false;
    time_ns finish = 0;
    std::vector<i32> results;
};

struct TraceLine {
    time_ns t = 0;
    std::string node;
    char proc = 'C'; // 'C' or 'Q'
    int task = -1;
    std::string what;
};

class Simulation {
public:
    explicit Simulation(SimConfig cfg);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    // --- assembly (before run) ---
    int add_node(const ehi::NodeInfo& info);
    int node_id(const std::string& name) const;
    void set_link(const std::string& node_a, const std::string& node_b,
                  const ehi::LinkInfo& link);
    int add_instance(int node_id, lang::InstantiatedProgram ip);
    // Replaces the slot schedule; exact-instance slots can only be formed
    // once the paired instances exist.
    void set_schedule(net::NetworkSchedule schedule);
    // Wires classical sockets and the entanglement session between two
    // instances whose programs reference each other's nodes.
    void pair_instances(int pid_a, int pid_b);

    // --- execution ---
    void run();
    bool deadlocked() const { return deadlocked_; }

    // --- results ---
    time_ns now() const;
    int num_instances() const;
    const InstanceResult& result(int pid) const;
    time_ns makespan() const;
    const std::vector<TraceLine>& trace() const { return trace_; }
    std::string trace_text() const;

    net::EntDist& entdist();
    const task::TaskGraph& node_graph(int node_id) const;
    u64 preemptions() const { return preemptions_; }

private:
    struct Node;
    struct Instance;
    struct TaskRun;
    struct InstCtx;

    Node& node_at(int id);
    Instance& inst_at(int pid);
    const lang::Program& prog_of(const Instance& inst) const;

    void build_initial_tasks(Instance& inst);
    void create_block_tasks(Instance& inst, int block_index);
    void sync_runs(Node& n);
    void activate_new_tasks(Node& n, Instance& inst, const std::vector<int>& ids);
    void make_ready(Node& n, int tid);

    void kick(Node& n);
    void try_dispatch_cps(Node& n);
    void try_dispatch_qps(Node& n);

    // CPS pieces
    void step_host(Node& n, int tid);
    void host_instr_done(Node& n, int tid);
    void run_call_step(Node& n, int tid); // PreCall/PostCall/Join body
    void do_pre_call(Node& n, int tid);
    void do_post_call(Node& n, int tid);

    // QPS pieces
    bool dispatch_local_routine(Node& n, int tid, bool is_callback);
    void dispatch_pair_task(Node& n, int tid);
    void finish_local_routine(Node& n, int tid, bool is_callback);

    void finish_task(Node& n, int tid);
    void advance_flow(Instance& inst);
    void finish_instance(Instance& inst);
    void on_message(const net::Endpoint& at);

    const std::vector<time_ns>& eff_deadlines(Node& n);
    void note(Node& n, char proc, int tid, const std::string& what);

    SimConfig cfg_;
    EventQueue eq_;
    Rng rng_;
    qsim::Backend backend_;
    ehi::NetworkInfo netinfo_;
    std::unique_ptr<net::ClassicalNetwork> cnet_;
    std::unique_ptr<net::EntDist> entdist_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<std::unique_ptr<Instance>> instances_; // pid = index
    std::vector<TraceLine> trace_;
    int unfinished_ = 0;
    bool started_ = false;
    bool deadlocked_ = false;
    u64 preemptions_ = 0;
};

} // namespace qnsim::sim
