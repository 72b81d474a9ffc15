#include "qnsim/ehi/ehi.hpp"

#include <algorithm>

namespace qnsim::ehi {

int NodeInfo::num_comm() const {
    int n = 0;
    for (const auto& q : qubits)
        if (q.is_comm) ++n;
    return n;
}

int NodeInfo::num_mem() const { return static_cast<int>(qubits.size()) - num_comm(); }

const GateInfo* NodeInfo::find_single(const std::string& name, bool comm_qubit) const {
    for (const auto& g : gates) {
        if (g.scope != GateScope::Single || g.name != name) continue;
        if ((comm_qubit && g.on_comm) || (!comm_qubit && g.on_mem)) return &g;
    }
    return nullptr;
}

const GateInfo* NodeInfo::find_two(const std::string& name, bool a_comm, bool b_comm) const {
    for (const auto& g : gates) {
        if (g.scope != GateScope::Two || g.name != name) continue;
        bool ok = (a_comm && b_comm)    ? g.comm_comm
                  : (!a_comm && !b_comm) ? g.mem_mem
                                         : g.comm_mem;
        if (ok) return &g;
    }
    return nullptr;
}

const GateInfo* NodeInfo::find_all(const std::string& name) const {
    for (const auto& g : gates)
        if (g.scope == GateScope::All && g.name == name) return &g;
    return nullptr;
}

bool NodeInfo::has_gate(const std::string& name) const {
    for (const auto& g : gates)
        if (g.name == name) return true;
    return false;
}

const LinkInfo* NetworkInfo::find_link(const std::string& a, const std::string& b) const {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = links.find(key);
    return it == links.end() ? nullptr : &it->second;
}

void NetworkInfo::set_link(const std::string& a, const std::string& b, LinkInfo info) {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    links[key] = info;
}

UnitModule derive_unit_module(const NodeInfo& node, int num_comm, int num_mem) {
    UnitModule um;
    const QubitInfo* comm_rep = nullptr;
    const QubitInfo* mem_rep = nullptr;
    for (const auto& q : node.qubits) {
        if (q.is_comm && !comm_rep) comm_rep = &q;
        if (!q.is_comm && !mem_rep) mem_rep = &q;
    }
    if (num_comm > node.num_comm())
        throw SetupError("unit module requests more communication qubits than node " +
                         node.name + " has");
    // Memory-kind virtual qubits may fall back to communication qubits.
    if (num_comm + num_mem > static_cast<int>(node.qubits.size()))
        throw SetupError("unit module requests more qubits than node " + node.name +
                         " has");
    for (int i = 0; i < num_comm; ++i) um.virt.push_back(*comm_rep);
    for (int i = 0; i < num_mem; ++i) um.virt.push_back(mem_rep ? *mem_rep : *comm_rep);
    return um;
}

namespace {

GateInfo single(const std::string& name, time_ns dur, bool on_comm, bool on_mem) {
    GateInfo g;
    g.name = name;
    g.scope = GateScope::Single;
    g.on_comm = on_comm;
    g.on_mem = on_mem;
    g.duration = dur;
    return g;
}

GateInfo two(const std::string& name, time_ns dur, bool cc, bool cm, bool mm) {
    GateInfo g;
    g.name = name;
    g.scope = GateScope::Two;
    g.comm_comm = cc;
    g.comm_mem = cm;
    g.mem_mem = mm;
    g.duration = dur;
    return g;
}

GateInfo all_gate(const std::string& name, time_ns dur) {
    GateInfo g;
    g.name = name;
    g.scope = GateScope::All;
    g.duration = dur;
    return g;
}

} // namespace

NodeInfo generic_preset(int num_qubits) {
    NodeInfo n;
    n.qubits.assign(num_qubits, QubitInfo{true, 1e9, 1e8});
    const time_ns single_dur = 5000, two_dur = 200000;
    for (const char* g : {"init", "rot_x", "rot_y", "rot_z", "x", "y", "z", "h", "meas"})
        n.gates.push_back(single(g, single_dur, true, true));
    for (const char* g : {"cnot", "cphase"})
        n.gates.push_back(two(g, two_dur, true, true, true));
    return n;
}

NodeInfo color_center_preset(int num_mem_qubits) {
    NodeInfo n;
    n.qubits.push_back(QubitInfo{true, 3.6e9, 5e8}); // optical interface qubit
    for (int i = 0; i < num_mem_qubits; ++i)
        n.qubits.push_back(QubitInfo{false, 3.5e10, 1e6}); // nuclear-spin memories
    const time_ns comm_dur = 300, mem_dur = 1200000, two_dur = 1000000;
    for (const char* g : {"init", "rot_x", "rot_y", "meas"})
        n.gates.push_back(single(g, comm_dur, true, false));
    for (const char* g : {"init", "rot_x", "rot_y", "rot_z", "meas"})
        n.gates.push_back(single(g, mem_dur, false, true));
    for (const char* g : {"crot_x", "crot_y"})
        n.gates.push_back(two(g, two_dur, false, true, false));
    return n;
}

NodeInfo trapped_ion_preset(int num_qubits) {
    NodeInfo n;
    n.qubits.assign(num_qubits, QubitInfo{true, kInf, 8.5e7});
    const time_ns single_dur = 26600, all_dur = 85000000;
    for (const char* g : {"init", "rot_z", "meas"})
        n.gates.push_back(single(g, single_dur, true, true));
    for (const char* g :
         {"init_all", "meas_all", "rot_x_all", "rot_y_all", "rot_z_all", "bichromatic"})
        n.gates.push_back(all_gate(g, all_dur));
    return n;
}

NodeInfo make_preset(const std::string& name, int num_qubits) {
    if (name == "generic") return generic_preset(num_qubits);
    if (name == "nv" || name == "color_center")
        return color_center_preset(std::max(0, num_qubits - 1));
    if (name == "trapped_ion" || name == "ion") return trapped_ion_preset(num_qubits);
    throw SetupError("unknown hardware preset: " + name);
}

std::optional<double> SymbolTable::lookup(const std::string& sym) const {
    if (sym == "T1") return t1;
    if (sym == "T2") return t2;
    if (sym == "CC") return static_cast<double>(cc);
    if (sym == "host_latency") return static_cast<double>(host_latency);
    if (sym == "qnos_latency") return static_cast<double>(qnos_latency);
    if (sym == "epr_duration") return static_cast<double>(epr_duration);
    return std::nullopt;
}

SymbolTable make_symbols(const NodeInfo& node, const LinkInfo* link) {
    SymbolTable s;
    if (!node.qubits.empty()) {
        s.t1 = node.qubits.front().t1;
        s.t2 = node.qubits.front().t2;
    }
    s.host_latency = node.host_latency;
    s.qnos_latency = node.qnos_latency;
    if (link) {
        s.cc = link->cc_latency;
        s.epr_duration = link->epr_duration;
    }
    return s;
}

} // namespace qnsim::ehi
