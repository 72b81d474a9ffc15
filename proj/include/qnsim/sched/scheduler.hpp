#pragma once
// Scheduling policy pieces shared by the two processor schedulers.
//
// FCFS dispatches ready tasks in the order they became ready. EDF dispatches
// the ready task with the earliest effective deadline, falling back to FCFS
// order among tasks without one. A task's effective deadline is inherited:
// the minimum over its own absolute deadline and those of all its
// descendants in the merged task graph (successors on either processor), so
// work feeding a deadlined task is prioritized too.

#include <optional>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/task/graph.hpp"

namespace qnsim::sched {

enum class Policy { Fcfs, Edf };

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name); // "fcfs" | "edf"

constexpr time_ns kNoDeadline = std::numeric_limits<time_ns>::max();

// eff[t] = min(abs[t], min over successors eff[s]), computed in reverse
// topological order over the whole graph.
std::vector<time_ns> effective_deadlines(const task::TaskGraph& g,
                                         const std::vector<time_ns>& abs_deadline);

// Ready tasks of one processor, ordered by arrival.
class ReadySet {
public:
    void insert(int tid);
    void erase(int tid);
    bool contains(int tid) const;
    bool empty() const { return items_.empty(); }
    size_t size() const { return items_.size(); }

    // Candidate ids in dispatch-preference order for the policy; the caller
    // walks the list until one is actually dispatchable.
    std::vector<int> ordered(Policy p, const std::vector<time_ns>& eff) const;

    // Arrival rank of a ready task (exposed for the preemption rule: a
    // preempted task re-enters at the back).
    u64 seq_of(int tid) const;

private:
    struct Item {
        int tid;
        u64 seq;
    };
    std::vector<Item> items_;
    u64 next_seq_ = 0;
};

} // namespace qnsim::sched
