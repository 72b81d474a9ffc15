#pragma once
// Exposed hardware interface: what a node's quantum device offers to the
// software stack — qubit kinds and decoherence times, available gates with
// durations, processor latencies — plus network-level link parameters.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnsim/common.hpp"

namespace qnsim::ehi {

struct QubitInfo {
    bool is_comm = true; // communication qubit (can hold an entangled-pair half)
    double t1 = kInf;    // ns
    double t2 = kInf;    // ns
};

enum class GateScope { Single, Two, All };

// One gate table entry. Applicability is by qubit kind: `Single` entries
// carry the kind they cover; `Two` entries the unordered kind combination;
// `All` entries act on every qubit allocated to the calling routine's
// instance at once.
struct GateInfo {
    std::string name;
    GateScope scope = GateScope::Single;
    bool on_comm = true;  // Single: covers communication qubits
    bool on_mem = true;   // Single: covers memory qubits
    bool comm_comm = true; // Two: both communication
    bool comm_mem = true;  // Two: one of each
    bool mem_mem = true;   // Two: both memory
    time_ns duration = 0;
    double depolar = 0.0; // per-qubit depolarising probability applied with the gate
};

struct NodeInfo {
    std::string name;
    int id = -1;
    std::vector<QubitInfo> qubits;
    std::vector<GateInfo> gates;
    time_ns host_latency = 1000; // per host instruction
    time_ns qnos_latency = 1000; // per classical routine instruction

    int num_comm() const;
    int num_mem() const;
    const GateInfo* find_single(const std::string& name, bool comm_qubit) const;
    const GateInfo* find_two(const std::string& name, bool a_comm, bool b_comm) const;
    const GateInfo* find_all(const std::string& name) const;
    bool has_gate(const std::string& name) const;
};

struct LinkInfo {
    double fidelity = 1.0;
    time_ns epr_duration = 1000000;
    time_ns cc_latency = 1000000; // classical node-to-node latency
};

struct NetworkInfo {
    // Link key is the lexicographically sorted node-name pair.
    std::map<std::pair<std::string, std::string>, LinkInfo> links;

    const LinkInfo* find_link(const std::string& a, const std::string& b) const;
    void set_link(const std::string& a, const std::string& b, LinkInfo info);
};

// Virtual qubit space requested by one program instance: communication
// qubits first, then memory qubits, each carrying the hardware parameters of
// the physical kind it may be mapped to.
struct UnitModule {
    std::vector<QubitInfo> virt;

    int size() const { return static_cast<int>(virt.size()); }
    bool valid_id(int v) const { return v >= 0 && v < size(); }
    bool is_comm(int v) const { return virt.at(v).is_comm; }
};

UnitModule derive_unit_module(const NodeInfo& node, int num_comm, int num_mem);

// Hardware presets. Qubit counts are per deployment, so they are arguments.
NodeInfo generic_preset(int num_qubits);
NodeInfo color_center_preset(int num_mem_qubits); // one optical comm qubit + nuclear memories
NodeInfo trapped_ion_preset(int num_qubits);      // uniform register with collective gates
NodeInfo make_preset(const std::string& name, int num_qubits);

// Named duration/decoherence symbols usable in deadline and time-hint
// expressions; values resolved against a node (and one of its links).
struct SymbolTable {
    double t1 = kInf, t2 = kInf;
    time_ns host_latency = 0, qnos_latency = 0;
    time_ns cc = 0, epr_duration = 0;

    std::optional<double> lookup(const std::string& sym) const;
};

SymbolTable make_symbols(const NodeInfo& node, const LinkInfo* link);

} // namespace qnsim::ehi
