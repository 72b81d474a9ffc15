#include "qnsim/mem/memory.hpp"

#include <algorithm>

namespace qnsim::mem {

const char* region_name(Region r) {
    switch (r) {
    case Region::LRIn: return "LR_in";
    case Region::LROut: return "LR_out";
    case Region::CRIn: return "CR_in";
    case Region::RRIn: return "RR_in";
    case Region::RROut: return "RR_out";
    }
    return "?";
}

bool can_write(Region r, Proc who) {
    switch (r) {
    case Region::LRIn:
    case Region::RRIn: return who == Proc::CPS;
    case Region::LROut:
    case Region::CRIn:
    case Region::RROut: return who == Proc::QPS;
    }
    return false;
}

bool can_read(Region r, Proc who) {
    switch (r) {
    case Region::LRIn:
    case Region::RRIn:
    case Region::CRIn: return who == Proc::QPS;
    case Region::LROut:
    case Region::RROut: return who == Proc::CPS;
    }
    return false;
}

void SharedMemory::alloc(Region r, const std::string& handle, size_t size) {
    Key k{r, handle};
    if (arrays_.count(k))
        throw InternalError("shared memory: handle '" + handle + "' already exists in " +
                            region_name(r));
    arrays_[k].resize(size);
}

bool SharedMemory::has(Region r, const std::string& handle) const {
    return arrays_.count({r, handle}) != 0;
}

const std::vector<std::optional<i32>>& SharedMemory::find(Region r,
                                                          const std::string& handle) const {
    auto it = arrays_.find({r, handle});
    if (it == arrays_.end())
        throw InternalError("shared memory: no array '" + handle + "' in " + region_name(r));
    return it->second;
}

std::vector<std::optional<i32>>& SharedMemory::find(Region r, const std::string& handle) {
    auto it = arrays_.find({r, handle});
    if (it == arrays_.end())
        throw InternalError("shared memory: no array '" + handle + "' in " + region_name(r));
    return it->second;
}

size_t SharedMemory::size(Region r, const std::string& handle) const {
    return find(r, handle).size();
}

void SharedMemory::write(Region r, const std::string& handle, size_t index, i32 value,
                         Proc who) {
    if (!can_write(r, who))
        throw InternalError(std::string("shared memory: ") +
                            (who == Proc::CPS ? "host" : "quantum") +
                            " processor cannot write region " + region_name(r));
    auto& arr = find(r, handle);
    if (index >= arr.size())
        throw ExecError("shared memory: index " + std::to_string(index) + " out of range for '" +
                        handle + "' (" + std::to_string(arr.size()) + " slots)");
    arr[index] = value;
}

i32 SharedMemory::read(Region r, const std::string& handle, size_t index, Proc who) const {
    if (!can_read(r, who))
        throw InternalError(std::string("shared memory: ") +
                            (who == Proc::CPS ? "host" : "quantum") +
                            " processor cannot read region " + region_name(r));
    const auto& arr = find(r, handle);
    if (index >= arr.size())
        throw ExecError("shared memory: index " + std::to_string(index) + " out of range for '" +
                        handle + "' (" + std::to_string(arr.size()) + " slots)");
    if (!arr[index])
        throw ExecError("shared memory: '" + handle + "[" + std::to_string(index) +
                        "]' read before it was written");
    return *arr[index];
}

bool SharedMemory::is_defined(Region r, const std::string& handle, size_t index) const {
    const auto& arr = find(r, handle);
    return index < arr.size() && arr[index].has_value();
}

void SharedMemory::free(Region r, const std::string& handle) {
    if (!arrays_.erase({r, handle}))
        throw InternalError("shared memory: freeing unknown array '" + handle + "'");
}

// --- quantum memory ---------------------------------------------------------------

QuantumMemory::QuantumMemory(std::vector<ehi::QubitInfo> phys, ehi::UnitModule um)
    : phys_(std::move(phys)), um_(std::move(um)) {
    owner_pid_.assign(phys_.size(), -1);
    owner_virt_.assign(phys_.size(), -1);
}

std::optional<int> QuantumMemory::phys_of(int pid, int virt) const {
    auto it = map_.find({pid, virt});
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::pair<int, int>> QuantumMemory::owner_of(int phys) const {
    if (phys < 0 || phys >= num_phys()) throw InternalError("owner_of: bad physical id");
    if (owner_pid_[static_cast<size_t>(phys)] < 0) return std::nullopt;
    return std::make_pair(owner_pid_[static_cast<size_t>(phys)],
                          owner_virt_[static_cast<size_t>(phys)]);
}

std::optional<int> QuantumMemory::pick_free(bool want_comm,
                                            const std::vector<bool>& taken) const {
    // Storage ids prefer storage qubits, then spill to communication qubits.
    for (int pass = 0; pass < (want_comm ? 1 : 2); ++pass) {
        bool comm_pass = want_comm || pass == 1;
        for (int p = 0; p < num_phys(); ++p) {
            if (taken[static_cast<size_t>(p)] || owner_pid_[static_cast<size_t>(p)] >= 0)
                continue;
            if (phys_[static_cast<size_t>(p)].is_comm == comm_pass) return p;
        }
    }
    return std::nullopt;
}

bool QuantumMemory::can_allocate(int pid, const std::vector<int>& virts) const {
    std::vector<bool> taken(phys_.size(), false);
    for (int v : virts) {
        if (!um_.valid_id(v)) return false;
        if (phys_of(pid, v)) continue; // already mapped
        auto p = pick_free(um_.is_comm(v), taken);
        if (!p) return false;
        taken[static_cast<size_t>(*p)] = true;
    }
    return true;
}

int QuantumMemory::allocate(int pid, int virt) {
    if (!um_.valid_id(virt))
        throw InternalError("allocate: virtual id " + std::to_string(virt) +
                            " outside the unit module");
    if (phys_of(pid, virt))
        throw InternalError("allocate: (pid " + std::to_string(pid) + ", virt " +
                            std::to_string(virt) + ") already mapped");
    std::vector<bool> taken(phys_.size(), false);
    auto p = pick_free(um_.is_comm(virt), taken);
    if (!p)
        throw ExecError("quantum memory exhausted: no free " +
                        std::string(um_.is_comm(virt) ? "communication" : "storage") +
                        " qubit for (pid " + std::to_string(pid) + ", virt " +
                        std::to_string(virt) + ")");
    owner_pid_[static_cast<size_t>(*p)] = pid;
    owner_virt_[static_cast<size_t>(*p)] = virt;
    map_[{pid, virt}] = *p;
    return *p;
}

int QuantumMemory::free(int pid, int virt) {
    auto it = map_.find({pid, virt});
    if (it == map_.end())
        throw InternalError("free: (pid " + std::to_string(pid) + ", virt " +
                            std::to_string(virt) + ") is not mapped");
    int p = it->second;
    owner_pid_[static_cast<size_t>(p)] = -1;
    owner_virt_[static_cast<size_t>(p)] = -1;
    map_.erase(it);
    return p;
}

std::vector<int> QuantumMemory::free_instance(int pid) {
    std::vector<int> freed;
    for (auto it = map_.begin(); it != map_.end();) {
        if (it->first.first == pid) {
            int p = it->second;
            owner_pid_[static_cast<size_t>(p)] = -1;
            owner_virt_[static_cast<size_t>(p)] = -1;
            freed.push_back(p);
            it = map_.erase(it);
        } else {
            ++it;
        }
    }
    std::sort(freed.begin(), freed.end());
    return freed;
}

std::vector<std::pair<int, int>> QuantumMemory::mapping(int pid) const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [key, p] : map_) {
        if (key.first == pid) out.push_back({key.second, p});
    }
    return out;
}

} // namespace qnsim::mem
