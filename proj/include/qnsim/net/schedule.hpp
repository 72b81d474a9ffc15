#pragma once
// Time-slotted access to the entanglement links.
//
// A schedule is either free (any session may generate at any time) or a
// repeating pattern of fixed-length slots. Each slot names the node pair it
// serves and optionally a concrete instance pair; a slot with wildcard
// instances admits any session between those nodes. Pair generation may only
// START inside a slot that admits the session; it is allowed to finish after
// the slot ends.

#include <string>
#include <vector>

#include "qnsim/common.hpp"

namespace qnsim::net {

// Normalized so that (node_a, pid_a) <= (node_b, pid_b).
struct SessionKey {
    int node_a = -1, pid_a = -1;
    int node_b = -1, pid_b = -1;

    static SessionKey make(int na, int pa, int nb, int pb);
    bool operator<(const SessionKey& o) const;
    bool operator==(const SessionKey& o) const;
    std::string to_string() const;
};

struct SlotEntry {
    int node_a = -1, node_b = -1; // served node pair (normalized, node_a <= node_b)
    int pid_a = -1, pid_b = -1;   // -1 admits any instance on that side
    bool idle = false;            // reserved empty slot

    static SlotEntry any(int na, int nb);                     // wildcard instances
    static SlotEntry exact(int na, int pa, int nb, int pb);   // one session
    static SlotEntry gap();                                   // nobody

    bool admits(const SessionKey& s) const;
};

class NetworkSchedule {
public:
    // Any session may start at any time.
    static NetworkSchedule free_mode();
    // Repeating `pattern` of `slot_len`-sized slots, first slot at `offset`.
    static NetworkSchedule pattern(time_ns slot_len, std::vector<SlotEntry> entries,
                                   time_ns offset = 0);

    bool is_free() const { return free_; }
    time_ns slot_len() const { return slot_len_; }

    // Is `t` inside a slot admitting this session?
    bool allows(time_ns t, const SessionKey& s) const;

    // Earliest slot start >= t admitting this session. Throws SetupError when
    // no slot in the pattern ever admits it.
    time_ns next_start(time_ns t, const SessionKey& s) const;

    // Slot boundaries around time t (pattern mode only; for tests/traces).
    std::pair<time_ns, time_ns> slot_bounds(time_ns t) const;

private:
    bool free_ = true;
    time_ns slot_len_ = 0;
    time_ns offset_ = 0;
    std::vector<SlotEntry> entries_;
};

} // namespace qnsim::net
