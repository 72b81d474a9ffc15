#include "qnsim/lang/ast.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qnsim::lang {

Operand Operand::make_int(i64 v) {
    Operand o;
    o.kind = Kind::Int;
    o.ival = v;
    return o;
}

Operand Operand::make_float(double v) {
    Operand o;
    o.kind = Kind::Float;
    o.fval = v;
    return o;
}

Operand Operand::make_var(std::string n) {
    Operand o;
    o.kind = Kind::Var;
    o.name = std::move(n);
    return o;
}

Operand Operand::make_template(std::string n) {
    Operand o;
    o.kind = Kind::Template;
    o.name = std::move(n);
    return o;
}

namespace {

struct OpName {
    HostOp op;
    const char* name;
};

constexpr OpName kHostOps[] = {
    {HostOp::Assign, "assign"},
    {HostOp::Add, "add"},
    {HostOp::Sub, "sub"},
    {HostOp::Mul, "mul"},
    {HostOp::Div, "div"},
    {HostOp::Vec, "vector"},
    {HostOp::Index, "index"},
    {HostOp::Unpack, "unpack"},
    {HostOp::SendCMsg, "send_cmsg"},
    {HostOp::RecvCMsg, "recv_cmsg"},
    {HostOp::RunRoutine, "run_routine"},
    {HostOp::RunRequest, "run_request"},
    {HostOp::SubmitRoutine, "submit_routine"},
    {HostOp::SubmitRequest, "submit_request"},
    {HostOp::JoinRoutines, "join_routines"},
    {HostOp::ReturnResult, "return_result"},
    {HostOp::Jmp, "jmp"},
    {HostOp::Beq, "beq"},
    {HostOp::Bne, "bne"},
    {HostOp::Blt, "blt"},
    {HostOp::Bge, "bge"},
};

} // namespace

const char* host_op_name(HostOp op) {
    for (const auto& e : kHostOps) {
        if (e.op == op) return e.name;
    }
    return "?";
}

std::optional<HostOp> host_op_from_name(const std::string& name) {
    for (const auto& e : kHostOps) {
        if (name == e.name) return e.op;
    }
    return std::nullopt;
}

bool is_branch(HostOp op) {
    return op == HostOp::Jmp || op == HostOp::Beq || op == HostOp::Bne || op == HostOp::Blt ||
           op == HostOp::Bge;
}

bool is_routine_call(HostOp op) {
    return op == HostOp::RunRoutine || op == HostOp::SubmitRoutine || op == HostOp::JoinRoutines;
}

bool is_request_call(HostOp op) {
    return op == HostOp::RunRequest || op == HostOp::SubmitRequest;
}

const char* block_type_name(BlockType t) {
    switch (t) {
    case BlockType::CL: return "CL";
    case BlockType::CC: return "CC";
    case BlockType::QL: return "QL";
    case BlockType::QC: return "QC";
    }
    return "?";
}

std::optional<BlockType> block_type_from_name(const std::string& name) {
    if (name == "CL") return BlockType::CL;
    if (name == "CC") return BlockType::CC;
    if (name == "QL") return BlockType::QL;
    if (name == "QC") return BlockType::QC;
    return std::nullopt;
}

time_ns TimeExpr::resolve(const ehi::SymbolTable& syms, const std::string& context) const {
    double ns = factor;
    if (!symbol.empty()) {
        auto v = syms.lookup(symbol);
        if (!v) throw SetupError(context + ": unknown timing symbol '" + symbol + "'");
        ns = factor * *v;
    }
    if (ns < 0) throw SetupError(context + ": negative duration");
    if (std::isinf(ns) || ns >= 9.0e18) return std::numeric_limits<time_ns>::max();
    return static_cast<time_ns>(std::llround(ns));
}

std::string TimeExpr::to_string() const {
    std::ostringstream os;
    os << factor;
    if (!symbol.empty()) os << " * " << symbol;
    return os.str();
}

int reg_index(const std::string& name) {
    if (name.size() < 2 || name.size() > 3) return -1;
    int base;
    switch (name[0]) {
    case 'R': base = 0; break;
    case 'C': base = 16; break;
    case 'M': base = 32; break;
    case 'Q': base = 48; break;
    default: return -1;
    }
    int num = 0;
    for (size_t i = 1; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return -1;
        num = num * 10 + (name[i] - '0');
    }
    if (name.size() == 3 && name[1] == '0') return -1; // reject R01
    if (num > 15) return -1;
    return base + num;
}

std::string reg_name(int index) {
    static const char classes[] = {'R', 'C', 'M', 'Q'};
    if (index < 0 || index >= kNumRegisters) return "?";
    return std::string(1, classes[index / 16]) + std::to_string(index % 16);
}

NqArg NqArg::make_reg(int r) {
    NqArg a;
    a.kind = Kind::Reg;
    a.reg = r;
    return a;
}

NqArg NqArg::make_imm(i64 v) {
    NqArg a;
    a.kind = Kind::Imm;
    a.imm = v;
    return a;
}

i64 VirtIdSpec::id_for_pair(i64 index) const {
    switch (mode) {
    case Mode::All: return base;
    case Mode::Increment: return base + index;
    case Mode::Custom:
        if (index < 0 || index >= static_cast<i64>(list.size()))
            throw InternalError("virt_ids: pair index out of range");
        return list[static_cast<size_t>(index)];
    }
    return 0;
}

int RequestRoutine::concrete_pairs() const {
    if (num_pairs.kind != Operand::Kind::Int)
        throw SetupError("request '" + name + "': pair count is still a template");
    return static_cast<int>(num_pairs.ival);
}

const Block* Program::find_block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

int Program::block_index(const std::string& name) const {
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

const LocalRoutine* Program::find_routine(const std::string& name) const {
    for (const auto& r : routines) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

const RequestRoutine* Program::find_request(const std::string& name) const {
    for (const auto& r : requests) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

} // namespace qnsim::lang
