#pragma once
// Executor for quantum-routine bodies.
//
// A routine body runs to completion on the quantum processor: classical
// instructions cost the quantum-node processing latency, quantum instructions
// cost their gate duration from the hardware description. Gates act on the
// simulated state at the absolute time at which the instruction finishes, so
// decoherence inside a routine is accounted for gate by gate.
//
// Qubit operands are registers holding *virtual* qubit ids; the memory map of
// the owning program instance translates them to physical qubits, and a
// node-to-backend table translates those to state-vector ids (all nodes share
// one backend so that entanglement can span nodes).

#include <string>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/mem/memory.hpp"
#include "qnsim/qsim/backend.hpp"

namespace qnsim::nqasm {

struct ExecResult {
    time_ns duration = 0; // sum of executed instruction durations
    i64 steps = 0;        // executed instruction count
};

// Static check that every quantum instruction of the body exists on the node
// (in at least one qubit-kind variant; the exact variant is resolved at run
// time from the qubit mapping).
DiagList validate_flavour(const lang::LocalRoutine& lr, const ehi::NodeInfo& node);

// Deterministic duration estimate from the static body: classical
// instructions cost qnos_latency, quantum instructions their gate duration
// (the slowest variant when a gate exists in several qubit-kind variants).
// Branches are not followed; bodies with loops under-estimate.
time_ns estimate_duration(const lang::LocalRoutine& lr, const ehi::NodeInfo& node);

class NqVm {
public:
    // `phys_to_backend` maps the node's physical qubit ids to backend ids.
    NqVm(qsim::Backend& backend, mem::QuantumMemory& qmem, const ehi::NodeInfo& node,
         std::vector<int> phys_to_backend);

    // Runs `lr` for instance `pid` starting at absolute time `start`.
    // Parameters are read from (in_region, in_handle); stores go to
    // (LROut, out_handle). All `uses` qubits must already be allocated.
    ExecResult run(const lang::LocalRoutine& lr, int pid, mem::SharedMemory& shm,
                   mem::Region in_region, const std::string& in_handle,
                   const std::string& out_handle, time_ns start, Rng& rng);

    // Safety valve against runaway loops.
    void set_step_limit(i64 limit) { step_limit_ = limit; }

private:
    qsim::Backend& backend_;
    mem::QuantumMemory& qmem_;
    const ehi::NodeInfo& node_;
    std::vector<int> phys_to_backend_;
    i64 step_limit_ = 1'000'000;
};

} // namespace qnsim::nqasm
