#pragma once
// Tasks and precedence graphs.
//
// Program blocks compile into small chains of tasks split across the two
// processors of a node:
//
//   CL  ->  HostLocal                                  (classical processor)
//   CC  ->  HostEvent (waits for a message)            (classical processor)
//   QL  ->  PreCall -> LocalRoutine -> PostCall        (Pre/Post classical,
//           per call; submit/join build fan-in shapes)  routine quantum)
//   QC  ->  PreCall -> SinglePair|MultiPair            (pair tasks quantum)
//              [-> callbacks] -> PostCall
//
// The full graph of an instance can be built ahead of time when control flow
// is static (no branches); otherwise tasks are created block by block as the
// instance runs. Deadline annotations become deadline edges: when the source
// task becomes ready at time t, the target task's absolute deadline becomes
// t + delta (minimum over several edges).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"
#include "qnsim/lang/ast.hpp"

namespace qnsim::task {

enum class TaskKind {
    HostLocal,    // one CL block
    HostEvent,    // one CC block
    PreCall,      // classical prologue of a routine/request call
    LocalRoutine, // quantum routine body
    PostCall,     // classical epilogue (binds outputs to host variables)
    Join,         // classical fan-in for submitted routines
    SinglePair,   // entanglement request, one pair
    MultiPair,    // entanglement request, several pairs
    Callback,     // routine attached to a request
};

const char* task_kind_name(TaskKind k);
bool is_cps_task(TaskKind k); // classical-processor task?

struct Task {
    int id = -1;
    TaskKind kind = TaskKind::HostLocal;
    int pid = -1;
    std::string block;  // originating block
    int iteration = 0;  // per-(pid, block) execution count
    int instr_index = -1; // call instruction within the block (chains only)
    int pair_index = -1;  // sequential callbacks: which pair

    const lang::LocalRoutine* lr = nullptr;   // LocalRoutine / Callback
    const lang::RequestRoutine* rr = nullptr; // pair tasks and their chains

    time_ns duration_est = 0;

    std::string label() const; // "pid3:b2#0:LocalRoutine(meas)" style
};

struct DeadlineEdge {
    int src = -1; // when this task becomes ready ...
    int dst = -1; // ... dst must finish within `delta`
    time_ns delta = 0;
};

class TaskGraph {
public:
    int add_task(Task t); // assigns the id
    void add_edge(int from, int to);
    void add_deadline_edge(int src, int dst, time_ns delta);

    int size() const { return static_cast<int>(tasks_.size()); }
    const Task& task(int id) const { return tasks_.at(static_cast<size_t>(id)); }
    Task& task(int id) { return tasks_.at(static_cast<size_t>(id)); }
    const std::vector<int>& succ(int id) const { return succ_.at(static_cast<size_t>(id)); }
    const std::vector<int>& pred(int id) const { return pred_.at(static_cast<size_t>(id)); }
    const std::vector<DeadlineEdge>& deadline_edges() const { return deadline_edges_; }
    bool has_edge(int from, int to) const;

    // Ids in a topological order (throws InternalError on a cycle).
    std::vector<int> topo_order() const;

    // Chains every task to its successor in id order, forcing fully serial
    // execution that respects creation order.
    void linearize();

    // All tasks of one instance.
    std::vector<int> tasks_of(int pid) const;

    std::string to_dot() const;
    std::string to_json_lines() const;

private:
    std::vector<Task> tasks_;
    std::vector<std::vector<int>> succ_, pred_;
    std::vector<DeadlineEdge> deadline_edges_;
};

// Processor-local views: tasks keep their same-processor precedence edges
// plus an edge from each closest same-processor ancestor reached through
// other-processor tasks; immediate predecessors on the other processor become
// external dependencies.
struct PartialGraphs {
    std::vector<std::pair<int, int>> cps_edges;
    std::vector<std::pair<int, int>> qps_edges;
    std::map<int, std::vector<int>> ext_deps; // task -> cross-processor preds

    bool edge_in_partial(int from, int to) const;
};

PartialGraphs split_graph(const TaskGraph& g);

// --- building -----------------------------------------------------------------

struct BuildContext {
    const ehi::NodeInfo* node = nullptr;
    // Pair-task durations per EPR socket id (from the link the socket uses).
    std::map<int, time_ns> epr_duration_by_socket;
};

// Tasks created for one block, with edges already added to `g`.
struct BlockTasks {
    int entry = -1;
    int exit = -1;
    std::vector<int> all;
};

// Compiles one block into tasks. `iteration` counts earlier executions of the
// same block for this instance.
BlockTasks create_tasks_for_block(TaskGraph& g, const lang::Program& prog,
                                  const lang::Block& blk, int pid, int iteration,
                                  const BuildContext& ctx);

// True when every block runs at most once in program order (no branches), so
// the whole task graph is known ahead of time.
bool is_predictable(const lang::Program& prog);

// Builds the complete graph of one instance: per-block chains, sequential
// edges between consecutive blocks, and deadline edges from the block
// annotations. Throws SetupError when the program is not predictable.
TaskGraph build_full_graph(const lang::Program& prog,
                           const std::map<std::string, std::vector<std::pair<std::string, time_ns>>>&
                               deadlines_ns,
                           int pid, const BuildContext& ctx);

// Same, but appends into an existing graph (several instances in one graph).
BlockTasks append_full_graph(TaskGraph& g, const lang::Program& prog,
                             const std::map<std::string,
                                            std::vector<std::pair<std::string, time_ns>>>&
                                 deadlines_ns,
                             int pid, const BuildContext& ctx);

} // namespace qnsim::task
