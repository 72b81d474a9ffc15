#include "qnsim/nqasm/vm.hpp"

#include <cmath>

#include "qnsim/lang/nq_ops.hpp"

namespace qnsim::nqasm {

using lang::NqArg;
using lang::NqInstr;
using lang::NqOpClass;

namespace {

i32 wrap(i64 v) { return static_cast<i32>(static_cast<u64>(v)); }

double angle_of(i64 n, i64 d, const std::string& ctx) {
    if (d < 0 || d > 30) throw ExecError(ctx + ": rotation denominator exponent out of range");
    return static_cast<double>(n) * M_PI / static_cast<double>(i64{1} << d);
}

time_ns slowest_variant(const ehi::NodeInfo& node, const std::string& gate) {
    time_ns best = -1;
    for (const auto& g : node.gates) {
        if (g.name == gate) best = std::max(best, g.duration);
    }
    return best;
}

} // namespace

DiagList validate_flavour(const lang::LocalRoutine& lr, const ehi::NodeInfo& node) {
    DiagList diags;
    for (size_t pc = 0; pc < lr.body.size(); ++pc) {
        const NqInstr& ins = lr.body[pc];
        auto sig = lang::nq_signature(ins.mnemonic);
        if (!sig || sig->cls == NqOpClass::Classical) continue;
        if (!node.has_gate(sig->gate))
            diags.push_back({"subroutine " + lr.name + " instr " + std::to_string(pc),
                             "node '" + node.name + "' has no '" + std::string(sig->gate) +
                                 "' operation"});
    }
    return diags;
}

time_ns estimate_duration(const lang::LocalRoutine& lr, const ehi::NodeInfo& node) {
    time_ns total = 0;
    for (const NqInstr& ins : lr.body) {
        auto sig = lang::nq_signature(ins.mnemonic);
        if (!sig) throw SetupError("estimate_duration: unknown instruction '" + ins.mnemonic + "'");
        if (sig->cls == NqOpClass::Classical) {
            total += node.qnos_latency;
        } else {
            time_ns d = slowest_variant(node, sig->gate);
            if (d < 0)
                throw SetupError("estimate_duration: node '" + node.name + "' has no '" +
                                 std::string(sig->gate) + "' operation");
            total += d;
        }
    }
    return total;
}

NqVm::NqVm(qsim::Backend& backend, mem::QuantumMemory& qmem, const ehi::NodeInfo& node,
           std::vector<int> phys_to_backend)
    : backend_(backend), qmem_(qmem), node_(node), phys_to_backend_(std::move(phys_to_backend)) {
    if (static_cast<int>(phys_to_backend_.size()) != qmem_.num_phys())
        throw InternalError("NqVm: backend map size does not match physical qubit count");
}

ExecResult NqVm::run(const lang::LocalRoutine& lr, int pid, mem::SharedMemory& shm,
                     mem::Region in_region, const std::string& in_handle,
                     const std::string& out_handle, time_ns start, Rng& rng) {
    std::array<i32, lang::kNumRegisters> regs{};

    auto ctx = [&](i64 pc, const NqInstr& ins) {
        return "subroutine " + lr.name + " (pid " + std::to_string(pid) + ") instr " +
               std::to_string(pc) + " (" + ins.mnemonic + ")";
    };

    // Operand accessors.
    auto reg_val = [&](const NqArg& a) -> i32 { return regs[static_cast<size_t>(a.reg)]; };
    auto value = [&](const NqArg& a, const std::string& c) -> i32 {
        switch (a.kind) {
        case NqArg::Kind::Reg: return reg_val(a);
        case NqArg::Kind::Imm:
            if (a.imm < INT32_MIN || a.imm > INT32_MAX)
                throw ExecError(c + ": immediate out of 32-bit range");
            return static_cast<i32>(a.imm);
        default: throw InternalError(c + ": operand is not a value");
        }
    };
    auto set_reg = [&](const NqArg& a, i32 v) { regs[static_cast<size_t>(a.reg)] = v; };

    // Physical/backend qubit for the virtual id held in a register.
    auto backend_qubit = [&](const NqArg& a, const std::string& c) -> std::pair<int, bool> {
        int virt = reg_val(a);
        auto phys = qmem_.phys_of(pid, virt);
        if (!phys)
            throw ExecError(c + ": virtual qubit " + std::to_string(virt) +
                            " is not allocated for this instance");
        bool is_comm = qmem_.phys_info(*phys).is_comm;
        return {phys_to_backend_.at(static_cast<size_t>(*phys)), is_comm};
    };

    auto gate_1q = [&](const std::string& gate, bool comm, const std::string& c)
        -> const ehi::GateInfo& {
        const ehi::GateInfo* g = node_.find_single(gate, comm);
        if (!g)
            throw ExecError(c + ": node '" + node_.name + "' has no '" + gate + "' on " +
                            (comm ? "communication" : "storage") + " qubits");
        return *g;
    };
    auto gate_2q = [&](const std::string& gate, bool ca, bool cb, const std::string& c)
        -> const ehi::GateInfo& {
        const ehi::GateInfo* g = node_.find_two(gate, ca, cb);
        if (!g)
            throw ExecError(c + ": node '" + node_.name + "' has no '" + gate +
                            "' for this qubit-kind combination");
        return *g;
    };
    auto gate_all = [&](const std::string& gate, const std::string& c) -> const ehi::GateInfo& {
        const ehi::GateInfo* g = node_.find_all(gate);
        if (!g)
            throw ExecError(c + ": node '" + node_.name + "' has no collective '" + gate + "'");
        return *g;
    };

    ExecResult res;
    i64 pc = 0;
    const i64 len = static_cast<i64>(lr.body.size());
    while (pc >= 0 && pc < len) {
        if (++res.steps > step_limit_)
            throw ExecError("subroutine " + lr.name + ": step limit exceeded (" +
                            std::to_string(step_limit_) + "); runaway loop?");
        const NqInstr& ins = lr.body[static_cast<size_t>(pc)];
        const std::string c = ctx(pc, ins);
        auto sig = lang::nq_signature(ins.mnemonic);
        if (!sig) throw InternalError(c + ": unknown instruction survived validation");

        i64 next = pc + 1;
        const auto& a = ins.args;

        if (sig->cls == NqOpClass::Classical) {
            res.duration += node_.qnos_latency;
            const std::string& m = ins.mnemonic;
            if (m == "set") {
                set_reg(a[0], value(a[1], c));
            } else if (m == "add" || m == "sub") {
                i64 x = value(a[1], c), y = value(a[2], c);
                set_reg(a[0], wrap(m == "add" ? x + y : x - y));
            } else if (m == "addm" || m == "subm") {
                i64 x = value(a[1], c), y = value(a[2], c), mod = value(a[3], c);
                if (mod <= 0) throw ExecError(c + ": modulus must be positive");
                i64 r = (m == "addm" ? x + y : x - y) % mod;
                if (r < 0) r += mod;
                set_reg(a[0], wrap(r));
            } else if (m == "div" || m == "rem") {
                i64 x = value(a[1], c), y = value(a[2], c);
                if (y == 0) throw ExecError(c + ": division by zero");
                set_reg(a[0], wrap(m == "div" ? x / y : x % y));
            } else if (m == "jmp") {
                next = pc + a[0].imm;
            } else if (m == "bez" || m == "bnz") {
                bool z = value(a[0], c) == 0;
                if (z == (m == "bez")) next = pc + a[1].imm;
            } else if (m == "beq" || m == "bne" || m == "blt" || m == "bge") {
                i32 x = value(a[0], c), y = value(a[1], c);
                bool take = m == "beq"   ? x == y
                            : m == "bne" ? x != y
                            : m == "blt" ? x < y
                                         : x >= y;
                if (take) next = pc + a[2].imm;
            } else if (m == "load" || m == "store") {
                const NqArg& addr = a[1];
                size_t idx = addr.idx_is_reg
                                 ? static_cast<size_t>(
                                       static_cast<u64>(regs[static_cast<size_t>(addr.idx_reg)]))
                                 : static_cast<size_t>(addr.idx_imm);
                if (m == "load") {
                    set_reg(a[0], shm.read(in_region, in_handle, idx, mem::Proc::QPS));
                } else {
                    shm.write(mem::Region::LROut, out_handle, idx, reg_val(a[0]),
                              mem::Proc::QPS);
                }
            } else {
                throw InternalError(c + ": unhandled classical instruction");
            }
            pc = next;
            continue;
        }

        // Quantum instruction: time advances by the gate duration, the state
        // change lands at the end of the window.
        const std::string& m = ins.mnemonic;
        if (sig->cls == NqOpClass::QuantumOne) {
            auto [q, comm] = backend_qubit(a[0], c);
            const ehi::GateInfo& g = gate_1q(sig->gate, comm, c);
            res.duration += g.duration;
            time_ns t = start + res.duration;
            if (m == "init") {
                backend_.reset(q, t);
            } else if (m == "meas") {
                int bit = backend_.measure(q, qsim::Basis::Z, t, rng);
                set_reg(a[1], bit);
            } else if (m == "x") {
                backend_.apply_1q(q, qsim::pauli_x(), t, g.depolar);
            } else if (m == "y") {
                backend_.apply_1q(q, qsim::pauli_y(), t, g.depolar);
            } else if (m == "z") {
                backend_.apply_1q(q, qsim::pauli_z(), t, g.depolar);
            } else if (m == "h") {
                backend_.apply_1q(q, qsim::hadamard(), t, g.depolar);
            } else { // rot_x / rot_y / rot_z
                double th = angle_of(value(a[1], c), a[2].imm, c);
                backend_.apply_1q(q, qsim::rot_matrix(m[4], th), t, g.depolar);
            }
        } else if (sig->cls == NqOpClass::QuantumTwo) {
            auto [qa, ca] = backend_qubit(a[0], c);
            auto [qb, cb] = backend_qubit(a[1], c);
            if (qa == qb) throw ExecError(c + ": the two operands are the same qubit");
            const ehi::GateInfo& g = gate_2q(sig->gate, ca, cb, c);
            res.duration += g.duration;
            time_ns t = start + res.duration;
            if (m == "cnot") {
                backend_.apply_2q(qa, qb, qsim::cnot_matrix(), t, g.depolar);
            } else if (m == "cphase") {
                backend_.apply_2q(qa, qb, qsim::cphase_matrix(), t, g.depolar);
            } else { // crot_x / crot_y
                double th = angle_of(value(a[2], c), a[3].imm, c);
                backend_.apply_2q(qa, qb, qsim::crot_matrix(m[5], th), t, g.depolar);
            }
        } else { // QuantumAll
            const ehi::GateInfo& g = gate_all(sig->gate, c);
            res.duration += g.duration;
            time_ns t = start + res.duration;
            auto mapping = qmem_.mapping(pid); // (virt, phys), sorted by virt
            std::vector<int> qs;
            for (const auto& [virt, phys] : mapping) {
                (void)virt;
                qs.push_back(phys_to_backend_.at(static_cast<size_t>(phys)));
            }
            if (m == "init_all") {
                for (int q : qs) backend_.reset(q, t);
            } else if (m == "meas_all") {
                if (a[0].reg + static_cast<int>(qs.size()) > lang::kNumRegisters)
                    throw ExecError(c + ": outcome registers run past the register file");
                for (size_t i = 0; i < qs.size(); ++i) {
                    int bit = backend_.measure(qs[i], qsim::Basis::Z, t, rng);
                    regs[static_cast<size_t>(a[0].reg) + i] = bit;
                }
            } else if (m == "bichromatic") {
                double th = angle_of(value(a[0], c), a[1].imm, c);
                if (qs.size() >= 2) backend_.apply_xx_all(qs, th, t, g.depolar);
            } else { // rot_x_all / rot_y_all / rot_z_all
                double th = angle_of(value(a[0], c), a[1].imm, c);
                for (int q : qs)
                    backend_.apply_1q(q, qsim::rot_matrix(m[4], th), t, g.depolar);
            }
        }
        pc = next;
    }
    if (pc != len)
        throw InternalError("subroutine " + lr.name + ": fell off the body (pc " +
                            std::to_string(pc) + ")");
    return res;
}

} // namespace qnsim::nqasm
