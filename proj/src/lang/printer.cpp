#include <sstream>

#include "qnsim/lang/ast.hpp"

namespace qnsim::lang {

namespace {

void print_operand(std::ostream& os, const Operand& o) {
    switch (o.kind) {
    case Operand::Kind::Int: os << o.ival; break;
    case Operand::Kind::Float: os << o.fval; break;
    case Operand::Kind::Var: os << o.name; break;
    case Operand::Kind::Template: os << '{' << o.name << '}'; break;
    }
}

void print_operand_list(std::ostream& os, const std::vector<Operand>& args) {
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        print_operand(os, args[i]);
    }
}

template <typename T>
void print_joined(std::ostream& os, const std::vector<T>& items) {
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) os << ", ";
        os << items[i];
    }
}

void print_host_instr(std::ostream& os, const HostInstr& ins) {
    if (ins.dst_is_tuple) {
        os << "tuple<";
        print_joined(os, ins.dst);
        os << "> = ";
    } else if (ins.dst_is_vector) {
        os << ins.dst[0] << "<> = ";
    } else if (!ins.dst.empty()) {
        os << ins.dst[0] << " = ";
    }
    os << host_op_name(ins.op) << '(';
    print_operand_list(os, ins.args);
    if (is_branch(ins.op)) {
        if (!ins.args.empty()) os << ", ";
        os << ins.target_block;
    }
    os << ')';
    if (ins.op == HostOp::Assign) {
        os << " : ";
        print_operand(os, ins.literal);
    } else if (!ins.routine.empty()) {
        os << " : " << ins.routine;
    }
    os << '\n';
}

void print_nq_arg(std::ostream& os, const NqArg& a) {
    switch (a.kind) {
    case NqArg::Kind::Reg: os << reg_name(a.reg); break;
    case NqArg::Kind::Imm: os << a.imm; break;
    case NqArg::Kind::Template: os << '{' << a.tpl << '}'; break;
    case NqArg::Kind::Addr:
        os << '@' << a.array << '[';
        if (a.idx_is_reg) os << reg_name(a.idx_reg);
        else os << a.idx_imm;
        os << ']';
        break;
    }
}

void print_socket_table(std::ostream& os, const char* key,
                        const std::map<int, std::string>& table) {
    if (table.empty()) return;
    os << "    " << key << ": ";
    bool first = true;
    for (const auto& [id, node] : table) {
        if (!first) os << ", ";
        first = false;
        os << id << " -> " << node;
    }
    os << '\n';
}

} // namespace

std::string print_program(const Program& prog) {
    std::ostringstream os;
    os << "META_START\n";
    os << "    name: " << prog.meta.name << '\n';
    if (!prog.meta.params.empty()) {
        os << "    parameters: ";
        print_joined(os, prog.meta.params);
        os << '\n';
    }
    print_socket_table(os, "csockets", prog.meta.csockets);
    print_socket_table(os, "epr_sockets", prog.meta.epr_sockets);
    os << "META_END\n";

    for (const auto& blk : prog.blocks) {
        os << "\n^" << blk.name << " {type = " << block_type_name(blk.type);
        if (!blk.deadlines.empty()) {
            os << ", deadlines = [";
            for (size_t i = 0; i < blk.deadlines.size(); ++i) {
                if (i) os << ", ";
                os << blk.deadlines[i].block << ": " << blk.deadlines[i].expr.to_string();
            }
            os << ']';
        }
        if (blk.time_hint) os << ", time_hint = " << blk.time_hint->to_string();
        os << "}:\n";
        for (const auto& ins : blk.instrs) {
            os << "    ";
            print_host_instr(os, ins);
        }
    }

    for (const auto& lr : prog.routines) {
        os << "\nSUBROUTINE " << lr.name << '\n';
        os << "    params: ";
        print_joined(os, lr.params);
        os << '\n';
        os << "    returns: ";
        print_joined(os, lr.returns);
        os << '\n';
        os << "    uses: ";
        print_joined(os, lr.uses);
        os << '\n';
        os << "    keeps: ";
        print_joined(os, lr.keeps);
        os << '\n';
        os << "  NETQASM_START\n";
        for (const auto& ins : lr.body) {
            os << "    " << ins.mnemonic;
            for (const auto& a : ins.args) {
                os << ' ';
                print_nq_arg(os, a);
            }
            os << '\n';
        }
        os << "  NETQASM_END\n";
    }

    for (const auto& rr : prog.requests) {
        os << "\nREQUEST " << rr.name << '\n';
        const char* cbt = rr.callback_type == CallbackType::Sequential ? "sequential"
                          : rr.callback_type == CallbackType::WaitAll  ? "wait_all"
                                                                       : "none";
        os << "    callback_type: " << cbt << '\n';
        os << "    callback: " << rr.callback << '\n';
        os << "    returns: ";
        if (rr.returns_vector) {
            os << rr.returns[0] << "<>";
        } else {
            print_joined(os, rr.returns);
        }
        os << '\n';
        os << "    remote_id: ";
        print_operand(os, rr.remote_id);
        os << '\n';
        os << "    epr_socket_id: " << rr.epr_socket << '\n';
        os << "    num_pairs: ";
        print_operand(os, rr.num_pairs);
        os << '\n';
        os << "    virt_ids: ";
        switch (rr.virt_ids.mode) {
        case VirtIdSpec::Mode::All: os << "all " << rr.virt_ids.base; break;
        case VirtIdSpec::Mode::Increment: os << "increment " << rr.virt_ids.base; break;
        case VirtIdSpec::Mode::Custom:
            os << "custom ";
            print_joined(os, rr.virt_ids.list);
            break;
        }
        os << '\n';
        os << "    fidelity: " << rr.min_fidelity << '\n';
        os << "    typ: "
           << (rr.typ == RequestType::CreateKeep        ? "create_keep"
               : rr.typ == RequestType::MeasureDirectly ? "measure_directly"
                                                        : "rsp")
           << '\n';
        os << "    role: " << (rr.role == RequestRole::Create ? "create" : "receive") << '\n';
    }
    return os.str();
}

} // namespace qnsim::lang
