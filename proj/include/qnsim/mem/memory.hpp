#pragma once
// Classical shared memory and the virtual-to-physical qubit mapping.
//
// Shared memory is the only data channel between the classical and quantum
// processors of a node. It is organised in regions with fixed access rules;
// each routine invocation gets fresh arrays under a per-invocation handle, so
// concurrently running routines of one program instance never alias.
//
// Quantum memory tracks, per program instance, an injective map from virtual
// qubit ids (the program's view) to physical qubit ids (the device's view).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"

namespace qnsim::mem {

enum class Proc { CPS, QPS };

// Regions:
//   LRIn   arguments of a local routine      (host writes, quantum reads)
//   LROut  results of a local routine        (quantum writes, host reads)
//   CRIn   per-pair data for callbacks       (quantum writes and reads)
//   RRIn   parameters of a request routine   (host writes, quantum reads)
//   RROut  outcomes of a request routine     (quantum writes, host reads)
enum class Region { LRIn, LROut, CRIn, RRIn, RROut };

const char* region_name(Region r);
bool can_write(Region r, Proc who);
bool can_read(Region r, Proc who);

// Shared classical memory of one program instance. Slots start undefined;
// reading an undefined slot is a program error.
class SharedMemory {
public:
    // Creates `size` undefined slots under (region, handle). Handles are
    // picked per invocation by the caller and must be fresh.
    void alloc(Region r, const std::string& handle, size_t size);
    bool has(Region r, const std::string& handle) const;
    size_t size(Region r, const std::string& handle) const;

    void write(Region r, const std::string& handle, size_t index, i32 value, Proc who);
    i32 read(Region r, const std::string& handle, size_t index, Proc who) const;
    bool is_defined(Region r, const std::string& handle, size_t index) const;

    void free(Region r, const std::string& handle);

private:
    using Key = std::pair<Region, std::string>;
    const std::vector<std::optional<i32>>& find(Region r, const std::string& handle) const;
    std::vector<std::optional<i32>>& find(Region r, const std::string& handle);
    std::map<Key, std::vector<std::optional<i32>>> arrays_;
};

// Physical qubit store of a node plus the per-instance virtual maps.
class QuantumMemory {
public:
    // `phys` describes the node's physical qubits (communication qubits and
    // storage qubits); `um` is the per-instance virtual interface.
    QuantumMemory(std::vector<ehi::QubitInfo> phys, ehi::UnitModule um);

    const ehi::UnitModule& unit() const { return um_; }
    int num_phys() const { return static_cast<int>(phys_.size()); }
    const ehi::QubitInfo& phys_info(int p) const { return phys_.at(static_cast<size_t>(p)); }

    // Physical qubit currently backing (pid, virt), if any.
    std::optional<int> phys_of(int pid, int virt) const;
    // Owner (pid, virt) of a physical qubit, if any.
    std::optional<std::pair<int, int>> owner_of(int phys) const;

    // True if the ids in `virts` that are not yet mapped for `pid` can all be
    // allocated simultaneously.
    bool can_allocate(int pid, const std::vector<int>& virts) const;

    // Maps (pid, virt) to a free physical qubit and returns it. Virtual ids
    // that declare a communication qubit get a communication qubit; storage
    // ids prefer storage qubits and spill to free communication qubits.
    // Lowest free index wins. Throws ExecError when nothing is free, and
    // InternalError for ids outside the unit module or double allocation.
    int allocate(int pid, int virt);

    // Releases (pid, virt); returns the physical qubit it occupied.
    int free(int pid, int virt);
    // Releases everything held by `pid`; returns the physical qubits freed.
    std::vector<int> free_instance(int pid);

    std::vector<std::pair<int, int>> mapping(int pid) const; // (virt, phys), sorted

private:
    std::optional<int> pick_free(bool want_comm, const std::vector<bool>& taken) const;

    std::vector<ehi::QubitInfo> phys_;
    ehi::UnitModule um_;
    std::vector<int> owner_pid_;            // -1 = free
    std::vector<int> owner_virt_;           // valid when owner_pid_ >= 0
    std::map<std::pair<int, int>, int> map_; // (pid, virt) -> phys
};

} // namespace qnsim::mem
