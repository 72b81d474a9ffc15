#include "qnsim/net/schedule.hpp"

#include <limits>
#include <sstream>
#include <tuple>

namespace qnsim::net {

SessionKey SessionKey::make(int na, int pa, int nb, int pb) {
    SessionKey k{na, pa, nb, pb};
    if (std::tie(k.node_a, k.pid_a) > std::tie(k.node_b, k.pid_b)) {
        std::swap(k.node_a, k.node_b);
        std::swap(k.pid_a, k.pid_b);
    }
    return k;
}

bool SessionKey::operator<(const SessionKey& o) const {
    return std::tie(node_a, pid_a, node_b, pid_b) <
           std::tie(o.node_a, o.pid_a, o.node_b, o.pid_b);
}

bool SessionKey::operator==(const SessionKey& o) const {
    return std::tie(node_a, pid_a, node_b, pid_b) ==
           std::tie(o.node_a, o.pid_a, o.node_b, o.pid_b);
}

std::string SessionKey::to_string() const {
    std::ostringstream os;
    os << "n" << node_a << ":p" << pid_a << "<->n" << node_b << ":p" << pid_b;
    return os.str();
}

SlotEntry SlotEntry::any(int na, int nb) {
    SlotEntry e;
    e.node_a = std::min(na, nb);
    e.node_b = std::max(na, nb);
    return e;
}

SlotEntry SlotEntry::exact(int na, int pa, int nb, int pb) {
    SessionKey k = SessionKey::make(na, pa, nb, pb);
    SlotEntry e;
    e.node_a = k.node_a;
    e.node_b = k.node_b;
    e.pid_a = k.pid_a;
    e.pid_b = k.pid_b;
    return e;
}

SlotEntry SlotEntry::gap() {
    SlotEntry e;
    e.idle = true;
    return e;
}

bool SlotEntry::admits(const SessionKey& s) const {
    if (idle) return false;
    if (node_a != s.node_a || node_b != s.node_b) return false;
    if (pid_a >= 0 && pid_a != s.pid_a) return false;
    if (pid_b >= 0 && pid_b != s.pid_b) return false;
    return true;
}

NetworkSchedule NetworkSchedule::free_mode() { return NetworkSchedule{}; }

NetworkSchedule NetworkSchedule::pattern(time_ns slot_len, std::vector<SlotEntry> entries,
                                         time_ns offset) {
    if (slot_len <= 0) throw SetupError("network schedule: slot length must be positive");
    if (entries.empty()) throw SetupError("network schedule: empty slot pattern");
    NetworkSchedule s;
    s.free_ = false;
    s.slot_len_ = slot_len;
    s.offset_ = offset;
    s.entries_ = std::move(entries);
    return s;
}

bool NetworkSchedule::allows(time_ns t, const SessionKey& s) const {
    if (free_) return true;
    if (t < offset_) return false;
    const i64 idx = (t - offset_) / slot_len_;
    const auto& e = entries_[static_cast<size_t>(idx % static_cast<i64>(entries_.size()))];
    return e.admits(s);
}

time_ns NetworkSchedule::next_start(time_ns t, const SessionKey& s) const {
    if (free_) return t;
    i64 idx = 0;
    if (t > offset_) idx = (t - offset_ + slot_len_ - 1) / slot_len_; // first start >= t
    const i64 n = static_cast<i64>(entries_.size());
    for (i64 k = 0; k < n; ++k) {
        const i64 i = idx + k;
        if (entries_[static_cast<size_t>(i % n)].admits(s))
            return offset_ + i * slot_len_;
    }
    throw SetupError("network schedule never admits session " + s.to_string());
}

std::pair<time_ns, time_ns> NetworkSchedule::slot_bounds(time_ns t) const {
    if (free_) throw InternalError("slot_bounds on a free schedule");
    if (t < offset_) return {std::numeric_limits<time_ns>::min(), offset_};
    const i64 idx = (t - offset_) / slot_len_;
    return {offset_ + idx * slot_len_, offset_ + (idx + 1) * slot_len_};
}

} // namespace qnsim::net
