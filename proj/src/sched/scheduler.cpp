#include "qnsim/sched/scheduler.hpp"

#include <algorithm>

namespace qnsim::sched {

const char* policy_name(Policy p) { return p == Policy::Fcfs ? "fcfs" : "edf"; }

Policy policy_from_name(const std::string& name) {
    if (name == "fcfs" || name == "FCFS") return Policy::Fcfs;
    if (name == "edf" || name == "EDF") return Policy::Edf;
    throw SetupError("unknown scheduling policy '" + name + "' (expected fcfs or edf)");
}

std::vector<time_ns> effective_deadlines(const task::TaskGraph& g,
                                         const std::vector<time_ns>& abs_deadline) {
    if (abs_deadline.size() != static_cast<size_t>(g.size()))
        throw InternalError("deadline array does not match graph");
    std::vector<time_ns> eff = abs_deadline;
    std::vector<int> order = g.topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        for (int s : g.succ(v))
            eff[static_cast<size_t>(v)] =
                std::min(eff[static_cast<size_t>(v)], eff[static_cast<size_t>(s)]);
    }
    return eff;
}

void ReadySet::insert(int tid) {
    if (contains(tid)) throw InternalError("task already ready: " + std::to_string(tid));
    items_.push_back(Item{tid, next_seq_++});
}

void ReadySet::erase(int tid) {
    auto it = std::find_if(items_.begin(), items_.end(),
                           [tid](const Item& i) { return i.tid == tid; });
    if (it == items_.end()) throw InternalError("task not ready: " + std::to_string(tid));
    items_.erase(it);
}

bool ReadySet::contains(int tid) const {
    return std::any_of(items_.begin(), items_.end(),
                       [tid](const Item& i) { return i.tid == tid; });
}

u64 ReadySet::seq_of(int tid) const {
    for (const Item& i : items_)
        if (i.tid == tid) return i.seq;
    throw InternalError("task not ready: " + std::to_string(tid));
}

std::vector<int> ReadySet::ordered(Policy p, const std::vector<time_ns>& eff) const {
    std::vector<Item> items = items_;
    if (p == Policy::Fcfs) {
        std::sort(items.begin(), items.end(),
                  [](const Item& a, const Item& b) { return a.seq < b.seq; });
    } else {
        std::sort(items.begin(), items.end(), [&eff](const Item& a, const Item& b) {
            const time_ns da = eff.at(static_cast<size_t>(a.tid));
            const time_ns db = eff.at(static_cast<size_t>(b.tid));
            if (da != db) return da < db;
            return a.seq < b.seq;
        });
    }
    std::vector<int> out;
    out.reserve(items.size());
    for (const Item& i : items) out.push_back(i.tid);
    return out;
}

} // namespace qnsim::sched
