#pragma once
// Discrete-event core: a time-ordered queue of closures.
//
// Events at the same timestamp run in signal-rank order (physical effects
// first, then scheduler wake-ups), and within the same rank in insertion
// order, which makes every run deterministic.

#include <functional>
#include <queue>
#include <vector>

#include "qnsim/common.hpp"

namespace qnsim::sim {

enum class Signal : int {
    Effect = 0,          // state changes (gate done, message lands, pair exists)
    TaskAdded = 1,       // new work became available
    TaskFinished = 2,    // a task completed
    SlotStart = 3,       // a network-schedule window opened
    MessageArrived = 4,  // a classical message is readable
};

const char* signal_name(Signal s);

class EventQueue {
public:
    time_ns now() const { return now_; }

    void at(time_ns t, Signal s, std::function<void()> fn);
    void in(time_ns dt, Signal s, std::function<void()> fn) { at(now_ + dt, s, std::move(fn)); }

    bool empty() const { return heap_.empty(); }
    size_t pending() const { return heap_.size(); }
    u64 executed() const { return executed_; }

    // Runs the next event (advancing now); false when the queue is empty.
    bool step();

private:
    struct Ev {
        time_ns t;
        int rank;
        u64 seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Ev& a, const Ev& b) const {
            if (a.t != b.t) return a.t > b.t;
            if (a.rank != b.rank) return a.rank > b.rank;
            return a.seq > b.seq;
        }
    };

    time_ns now_ = 0;
    u64 seq_ = 0;
    u64 executed_ = 0;
    std::priority_queue<Ev, std::vector<Ev>, Later> heap_;
};

} // namespace qnsim::sim
