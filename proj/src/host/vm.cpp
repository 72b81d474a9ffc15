#include "qnsim/host/vm.hpp"

#include <cmath>
#include <sstream>

namespace qnsim::host {

using lang::HostInstr;
using lang::HostOp;
using lang::Operand;

std::string value_to_string(const Value& v) {
    std::ostringstream os;
    if (std::holds_alternative<i32>(v)) {
        os << std::get<i32>(v);
    } else if (std::holds_alternative<float>(v)) {
        os << std::get<float>(v);
    } else {
        os << '[';
        const auto& vec = std::get<std::vector<i32>>(v);
        for (size_t i = 0; i < vec.size(); ++i) {
            if (i) os << ", ";
            os << vec[i];
        }
        os << ']';
    }
    return os.str();
}

const Value& HostState::get(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw ExecError("host: variable '" + name + "' used before assignment");
    return it->second;
}

void HostState::set(const std::string& name, Value v) { vars[name] = std::move(v); }

Value HostState::eval(const Operand& op) const {
    switch (op.kind) {
    case Operand::Kind::Int:
        if (op.ival < INT32_MIN || op.ival > INT32_MAX)
            throw ExecError("host: literal out of 32-bit range");
        return static_cast<i32>(op.ival);
    case Operand::Kind::Float: return static_cast<float>(op.fval);
    case Operand::Kind::Var: return get(op.name);
    case Operand::Kind::Template:
        throw InternalError("host: template '{" + op.name + "}' survived instantiation");
    }
    throw InternalError("host: bad operand kind");
}

i32 HostState::eval_int(const Operand& op, const std::string& ctx) const {
    Value v = eval(op);
    if (!std::holds_alternative<i32>(v))
        throw ExecError("host: " + ctx + " needs an integer, got " + value_to_string(v));
    return std::get<i32>(v);
}

namespace {

i32 wrap(i64 v) { return static_cast<i32>(static_cast<u64>(v)); }

Value arith(HostOp op, const Value& a, const Value& b) {
    if (std::holds_alternative<std::vector<i32>>(a) || std::holds_alternative<std::vector<i32>>(b))
        throw ExecError("host: arithmetic on vectors");
    bool flt = std::holds_alternative<float>(a) || std::holds_alternative<float>(b);
    if (flt) {
        auto as_f = [](const Value& v) {
            return std::holds_alternative<float>(v) ? std::get<float>(v)
                                                    : static_cast<float>(std::get<i32>(v));
        };
        float x = as_f(a), y = as_f(b);
        switch (op) {
        case HostOp::Add: return x + y;
        case HostOp::Sub: return x - y;
        case HostOp::Mul: return x * y;
        case HostOp::Div:
            if (y == 0.0f) throw ExecError("host: division by zero");
            return x / y;
        default: break;
        }
    } else {
        i64 x = std::get<i32>(a), y = std::get<i32>(b);
        switch (op) {
        case HostOp::Add: return wrap(x + y);
        case HostOp::Sub: return wrap(x - y);
        case HostOp::Mul: return wrap(x * y);
        case HostOp::Div:
            if (y == 0) throw ExecError("host: division by zero");
            return wrap(x / y);
        default: break;
        }
    }
    throw InternalError("host: not an arithmetic op");
}

} // namespace

InstrOutcome exec_instr(HostState& st, const lang::Block& blk, size_t pc, HostContext& ctx) {
    if (pc >= blk.instrs.size())
        throw InternalError("host: pc " + std::to_string(pc) + " outside block " + blk.name);
    const HostInstr& ins = blk.instrs[pc];
    const std::string where = "block " + blk.name + " instr " + std::to_string(pc);

    switch (ins.op) {
    case HostOp::Assign:
        st.set(ins.dst[0], st.eval(ins.literal));
        break;
    case HostOp::Add:
    case HostOp::Sub:
    case HostOp::Mul:
    case HostOp::Div:
        st.set(ins.dst[0], arith(ins.op, st.eval(ins.args[0]), st.eval(ins.args[1])));
        break;
    case HostOp::Vec: {
        std::vector<i32> vec;
        for (const auto& a : ins.args) vec.push_back(st.eval_int(a, "vector element"));
        st.set(ins.dst[0], std::move(vec));
        break;
    }
    case HostOp::Index: {
        Value v = st.eval(ins.args[0]);
        if (!std::holds_alternative<std::vector<i32>>(v))
            throw ExecError("host: " + where + ": index into a non-vector");
        const auto& vec = std::get<std::vector<i32>>(v);
        i32 i = st.eval_int(ins.args[1], "vector index");
        if (i < 0 || static_cast<size_t>(i) >= vec.size())
            throw ExecError("host: " + where + ": index " + std::to_string(i) +
                            " out of range (size " + std::to_string(vec.size()) + ")");
        st.set(ins.dst[0], vec[static_cast<size_t>(i)]);
        break;
    }
    case HostOp::Unpack: {
        Value v = st.eval(ins.args[0]);
        if (!std::holds_alternative<std::vector<i32>>(v))
            throw ExecError("host: " + where + ": unpack of a non-vector");
        const auto& vec = std::get<std::vector<i32>>(v);
        if (vec.size() != ins.dst.size())
            throw ExecError("host: " + where + ": unpack of " + std::to_string(vec.size()) +
                            " element(s) into " + std::to_string(ins.dst.size()) + " name(s)");
        for (size_t i = 0; i < ins.dst.size(); ++i) st.set(ins.dst[i], vec[i]);
        break;
    }
    case HostOp::SendCMsg: {
        i32 sock = st.eval_int(ins.args[0], "socket id");
        Value v = st.eval(ins.args[1]);
        std::vector<i32> payload;
        if (std::holds_alternative<i32>(v)) {
            payload.push_back(std::get<i32>(v));
        } else if (std::holds_alternative<std::vector<i32>>(v)) {
            const auto& vec = std::get<std::vector<i32>>(v);
            payload.push_back(static_cast<i32>(vec.size())); // length prefix
            payload.insert(payload.end(), vec.begin(), vec.end());
        } else {
            throw ExecError("host: " + where + ": messages carry integers, got " +
                            value_to_string(v));
        }
        ctx.send_message(sock, payload);
        break;
    }
    case HostOp::RecvCMsg: {
        i32 sock = st.eval_int(ins.args[0], "socket id");
        auto msg = ctx.try_recv(sock);
        if (!msg) {
            InstrOutcome out;
            out.kind = InstrOutcome::Kind::Blocked;
            out.socket = sock;
            return out;
        }
        st.set(ins.dst[0], *msg);
        break;
    }
    case HostOp::ReturnResult: {
        for (const auto& a : ins.args) {
            Value v = st.eval(a);
            if (std::holds_alternative<i32>(v)) {
                st.results.push_back(std::get<i32>(v));
            } else if (std::holds_alternative<std::vector<i32>>(v)) {
                const auto& vec = std::get<std::vector<i32>>(v);
                st.results.insert(st.results.end(), vec.begin(), vec.end());
            } else {
                throw ExecError("host: " + where + ": results are integers, got " +
                                value_to_string(v));
            }
        }
        st.returned = true;
        InstrOutcome out;
        out.kind = InstrOutcome::Kind::Return;
        return out;
    }
    case HostOp::Jmp: {
        InstrOutcome out;
        out.kind = InstrOutcome::Kind::Jump;
        out.target = ins.target_block;
        return out;
    }
    case HostOp::Beq:
    case HostOp::Bne:
    case HostOp::Blt:
    case HostOp::Bge: {
        i32 x = st.eval_int(ins.args[0], "branch operand");
        i32 y = st.eval_int(ins.args[1], "branch operand");
        bool take = ins.op == HostOp::Beq   ? x == y
                    : ins.op == HostOp::Bne ? x != y
                    : ins.op == HostOp::Blt ? x < y
                                            : x >= y;
        if (take) {
            InstrOutcome out;
            out.kind = InstrOutcome::Kind::Jump;
            out.target = ins.target_block;
            return out;
        }
        break;
    }
    case HostOp::RunRoutine:
    case HostOp::RunRequest:
    case HostOp::SubmitRoutine:
    case HostOp::SubmitRequest:
    case HostOp::JoinRoutines:
        throw InternalError("host: " + where +
                            ": quantum-routine calls must be compiled to tasks, not executed "
                            "on the host VM");
    }
    return InstrOutcome{};
}

InstrOutcome exec_block(HostState& st, const lang::Block& blk, HostContext& ctx) {
    InstrOutcome out;
    for (size_t pc = 0; pc < blk.instrs.size(); ++pc) {
        out = exec_instr(st, blk, pc, ctx);
        switch (out.kind) {
        case InstrOutcome::Kind::Advance: break;
        case InstrOutcome::Kind::Blocked:
            throw ExecError("host: exec_block: blocked on socket " +
                            std::to_string(out.socket));
        default: return out;
        }
    }
    return out;
}

} // namespace qnsim::host
