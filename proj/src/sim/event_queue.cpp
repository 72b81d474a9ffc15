#include "qnsim/sim/event_queue.hpp"

namespace qnsim::sim {

const char* signal_name(Signal s) {
    switch (s) {
    case Signal::Effect: return "effect";
    case Signal::TaskAdded: return "task_added";
    case Signal::TaskFinished: return "task_finished";
    case Signal::SlotStart: return "slot_start";
    case Signal::MessageArrived: return "message_arrived";
    }
    return "?";
}

void EventQueue::at(time_ns t, Signal s, std::function<void()> fn) {
    if (t < now_)
        throw InternalError("event scheduled in the past: " + std::to_string(t) + " < " +
                            std::to_string(now_));
    heap_.push(Ev{t, static_cast<int>(s), seq_++, std::move(fn)});
}

bool EventQueue::step() {
    if (heap_.empty()) return false;
    Ev ev = heap_.top();
    heap_.pop();
    now_ = ev.t;
    ++executed_;
    ev.fn();
    return true;
}

} // namespace qnsim::sim
