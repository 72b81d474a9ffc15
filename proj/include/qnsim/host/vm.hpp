#pragma once
// Stepping executor for the classical (host) instructions of a program.
//
// The classical processor runs host blocks one instruction at a time (each
// instruction costs one host-latency step), so the executor exposes a
// single-instruction `exec` — the scheduler owns the program counter and
// decides when the next instruction fires. Quantum-routine calls never reach
// this executor: blocks that contain them are turned into quantum-processor
// tasks elsewhere.
//
// Values are 32-bit integers (wrapping arithmetic), 32-bit floats, or integer
// vectors. Messages carry one integer each; sending a vector emits a
// length-prefixed train of messages.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/lang/ast.hpp"

namespace qnsim::host {

using Value = std::variant<i32, float, std::vector<i32>>;

std::string value_to_string(const Value& v);

// Classical state of one program instance.
struct HostState {
    std::map<std::string, Value> vars;
    std::vector<i32> results; // filled by return_result (vectors flattened)
    bool returned = false;

    const Value& get(const std::string& name) const;
    void set(const std::string& name, Value v);
    // Evaluates an operand: literals pass through, names are looked up.
    Value eval(const lang::Operand& op) const;
    // Like eval, but requires an integer.
    i32 eval_int(const lang::Operand& op, const std::string& ctx) const;
};

// Environment the scheduler provides for message traffic.
class HostContext {
public:
    virtual ~HostContext() = default;
    // Queues scalar payloads on a classical socket, FIFO.
    virtual void send_message(int socket, const std::vector<i32>& payload) = 0;
    // Pops the next pending message, or nullopt if none has arrived yet.
    virtual std::optional<i32> try_recv(int socket) = 0;
};

struct InstrOutcome {
    enum class Kind {
        Advance, // fall through to the next instruction
        Jump,    // leave the block for `target`
        Blocked, // recv has no message yet; retry the same instruction later
        Return,  // return_result executed, instance is finished
    };
    Kind kind = Kind::Advance;
    std::string target; // Jump
    int socket = -1;    // Blocked
};

// Executes `blk.instrs[pc]`. Throws ExecError for program faults and
// InternalError if a quantum-routine call slips through.
InstrOutcome exec_instr(HostState& st, const lang::Block& blk, size_t pc, HostContext& ctx);

// Test helper: runs a whole block to completion (throws on Blocked).
// Returns the outcome of the last instruction executed.
InstrOutcome exec_block(HostState& st, const lang::Block& blk, HostContext& ctx);

} // namespace qnsim::host
