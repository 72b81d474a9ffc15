#include <algorithm>
#include <set>

#include "qnsim/lang/ast.hpp"
#include "qnsim/lang/nq_ops.hpp"

namespace qnsim::lang {

namespace {

struct Checker {
    const Program& prog;
    DiagList diags;

    void add(const std::string& where, const std::string& msg) { diags.push_back({where, msg}); }

    void collect_template(const Operand& o, const std::string& where,
                          std::set<std::string>& seen) {
        if (o.kind == Operand::Kind::Template) {
            seen.insert(o.name);
            if (std::find(prog.meta.params.begin(), prog.meta.params.end(), o.name) ==
                prog.meta.params.end())
                add(where, "template '{" + o.name + "}' is not a declared parameter");
        }
    }

    void check_meta() {
        if (prog.meta.name.empty()) add("meta", "program has no name");
        std::set<std::string> seen;
        for (const auto& p : prog.meta.params) {
            if (!seen.insert(p).second) add("meta", "duplicate parameter '" + p + "'");
        }
    }

    void check_block(const Block& blk) {
        std::string where = "block " + blk.name;
        for (const auto& d : blk.deadlines) {
            if (!prog.find_block(d.block))
                add(where, "deadline references unknown block '" + d.block + "'");
        }
        std::set<std::string> tpls;

        for (size_t i = 0; i < blk.instrs.size(); ++i) {
            const HostInstr& ins = blk.instrs[i];
            std::string iw = where + " instr " + std::to_string(i);
            for (const auto& a : ins.args) collect_template(a, iw, tpls);
            if (ins.op == HostOp::Assign) collect_template(ins.literal, iw, tpls);

            bool call = is_routine_call(ins.op) || is_request_call(ins.op);
            switch (blk.type) {
            case BlockType::CL:
                if (call) add(iw, "compute blocks cannot call quantum routines");
                if (ins.op == HostOp::RecvCMsg)
                    add(iw, "compute blocks cannot receive messages");
                break;
            case BlockType::CC:
                if (call) add(iw, "receive blocks cannot call quantum routines");
                if (i == 0 && ins.op != HostOp::RecvCMsg)
                    add(iw, "receive blocks must start with recv_cmsg");
                if (i > 0 && ins.op == HostOp::RecvCMsg)
                    add(iw, "receive blocks contain exactly one recv_cmsg, as the first "
                            "instruction");
                break;
            case BlockType::QL:
                if (!is_routine_call(ins.op))
                    add(iw, "local-routine blocks may only contain run_routine, "
                            "submit_routine and join_routines");
                break;
            case BlockType::QC:
                if (!is_request_call(ins.op) && ins.op != HostOp::JoinRoutines)
                    add(iw, "request blocks may only contain run_request, submit_request "
                            "and join_routines");
                break;
            }

            if (is_branch(ins.op) && !prog.find_block(ins.target_block))
                add(iw, "branch to unknown block '" + ins.target_block + "'");

            if (ins.op == HostOp::RunRoutine || ins.op == HostOp::SubmitRoutine) {
                const LocalRoutine* lr = prog.find_routine(ins.routine);
                if (!lr) {
                    add(iw, "unknown local routine '" + ins.routine + "'");
                } else if (ins.args.size() != lr->params.size()) {
                    add(iw, "routine '" + ins.routine + "' takes " +
                                std::to_string(lr->params.size()) + " argument(s), got " +
                                std::to_string(ins.args.size()));
                }
            }
            if (is_request_call(ins.op) && !prog.find_request(ins.routine))
                add(iw, "unknown request routine '" + ins.routine + "'");

            if (ins.op == HostOp::SendCMsg || ins.op == HostOp::RecvCMsg) {
                const Operand& sock = ins.args[0];
                if (sock.kind == Operand::Kind::Int &&
                    !prog.meta.csockets.count(static_cast<int>(sock.ival)))
                    add(iw, "classical socket " + std::to_string(sock.ival) +
                                " is not declared in META");
                if (sock.kind == Operand::Kind::Float || sock.kind == Operand::Kind::Var)
                    add(iw, "socket id must be an integer or template");
            }
        }
        if (blk.type == BlockType::CC && blk.instrs.empty())
            add(where, "receive blocks must start with recv_cmsg");
    }

    void check_routine(const LocalRoutine& lr) {
        std::string where = "subroutine " + lr.name;
        std::set<std::string> names;
        for (const auto& p : lr.params)
            if (!names.insert(p).second) add(where, "duplicate parameter '" + p + "'");
        names.clear();
        for (const auto& r : lr.returns)
            if (!names.insert(r).second) add(where, "duplicate return '" + r + "'");

        std::set<int> uses(lr.uses.begin(), lr.uses.end());
        if (uses.size() != lr.uses.size()) add(where, "duplicate id in uses");
        for (int u : lr.uses)
            if (u < 0) add(where, "negative virtual qubit id in uses");
        for (int k : lr.keeps) {
            if (!uses.count(k))
                add(where, "keeps id " + std::to_string(k) + " is not listed in uses");
        }

        int len = static_cast<int>(lr.body.size());
        for (int pc = 0; pc < len; ++pc) {
            const NqInstr& ins = lr.body[static_cast<size_t>(pc)];
            std::string iw = where + " instr " + std::to_string(pc) + " (" + ins.mnemonic + ")";
            auto sig = nq_signature(ins.mnemonic);
            if (!sig) {
                if (is_legacy_nq_instruction(ins.mnemonic)) {
                    add(iw, "'" + ins.mnemonic +
                                "' belongs to the legacy shared-memory flavour and is not "
                                "supported; qubit use is declared through uses/keeps and data "
                                "moves through @input/@output");
                } else {
                    add(iw, "unknown instruction '" + ins.mnemonic + "'");
                }
                continue;
            }
            std::string shape = sig->shape;
            if (ins.args.size() != shape.size()) {
                add(iw, "expected " + std::to_string(shape.size()) + " operand(s), got " +
                            std::to_string(ins.args.size()));
                continue;
            }
            for (size_t k = 0; k < shape.size(); ++k) {
                const NqArg& a = ins.args[k];
                std::string aw = iw + " operand " + std::to_string(k);
                switch (shape[k]) {
                case 'r':
                    if (a.kind != NqArg::Kind::Reg) add(aw, "expected a register");
                    break;
                case 'v':
                    if (a.kind == NqArg::Kind::Addr) add(aw, "expected a register or immediate");
                    break;
                case 'i':
                    if (a.kind != NqArg::Kind::Imm && a.kind != NqArg::Kind::Template)
                        add(aw, "expected an immediate");
                    break;
                case 'o': {
                    if (a.kind != NqArg::Kind::Imm) {
                        add(aw, "branch offset must be an immediate");
                        break;
                    }
                    i64 tgt = pc + a.imm;
                    if (a.imm == 0) add(aw, "branch offset 0 loops forever");
                    if (tgt < 0 || tgt > len)
                        add(aw, "branch target " + std::to_string(tgt) +
                                    " is outside the routine body");
                    break;
                }
                case 'a': {
                    if (a.kind != NqArg::Kind::Addr) {
                        add(aw, "expected '@array[index]'");
                        break;
                    }
                    bool is_store = ins.mnemonic == "store";
                    const char* want = is_store ? "output" : "input";
                    if (a.array != want)
                        add(aw, std::string(is_store ? "store" : "load") + " must address @" +
                                    want);
                    if (is_store && !a.idx_is_reg &&
                        a.idx_imm >= static_cast<i64>(lr.returns.size()))
                        add(aw, "store index " + std::to_string(a.idx_imm) +
                                    " exceeds the " + std::to_string(lr.returns.size()) +
                                    " declared return value(s)");
                    break;
                }
                default: break;
                }
                if (a.kind == NqArg::Kind::Template) {
                    if (std::find(prog.meta.params.begin(), prog.meta.params.end(), a.tpl) ==
                        prog.meta.params.end())
                        add(aw, "template '{" + a.tpl + "}' is not a declared parameter");
                }
            }
        }
    }

    void check_request(const RequestRoutine& rr) {
        std::string where = "request " + rr.name;
        if (rr.callback_type != CallbackType::None) {
            if (rr.callback.empty()) {
                add(where, "callback_type set but no callback routine named");
            } else {
                const LocalRoutine* cb = prog.find_routine(rr.callback);
                if (!cb) {
                    add(where, "unknown callback routine '" + rr.callback + "'");
                } else {
                    if (!cb->returns.empty())
                        add(where, "callback '" + rr.callback + "' must not return host values");
                    if (!cb->params.empty())
                        add(where, "callback '" + rr.callback + "' must not take parameters");
                }
            }
        } else if (!rr.callback.empty()) {
            add(where, "callback named but callback_type is none");
        }

        if (!rr.returns.empty() && rr.typ != RequestType::MeasureDirectly)
            add(where, "only measure_directly requests return values");

        if (!prog.meta.epr_sockets.count(rr.epr_socket))
            add(where, "EPR socket " + std::to_string(rr.epr_socket) +
                           " is not declared in META");

        std::set<std::string> tpls;
        collect_template(rr.remote_id, where, tpls);
        collect_template(rr.num_pairs, where, tpls);

        if (rr.num_pairs.kind == Operand::Kind::Int) {
            i64 n = rr.num_pairs.ival;
            if (n < 1) add(where, "num_pairs must be at least 1");
            if (rr.typ == RequestType::MeasureDirectly && !rr.returns_vector &&
                !rr.returns.empty() && static_cast<i64>(rr.returns.size()) != n)
                add(where, "measure_directly with " + std::to_string(n) +
                               " pairs needs one return name per pair (or a vector return)");
            if (rr.virt_ids.mode == VirtIdSpec::Mode::Custom &&
                static_cast<i64>(rr.virt_ids.list.size()) < n)
                add(where, "custom virt_ids lists fewer ids than num_pairs");
        }
        if (rr.min_fidelity <= 0.0 || rr.min_fidelity > 1.0)
            add(where, "fidelity must be in (0, 1]");
    }

    DiagList run() {
        check_meta();
        for (const auto& b : prog.blocks) check_block(b);
        for (const auto& r : prog.routines) check_routine(r);
        for (const auto& r : prog.requests) check_request(r);
        return std::move(diags);
    }
};

} // namespace

DiagList validate_program(const Program& prog) {
    Checker c{prog, {}};
    return c.run();
}

} // namespace qnsim::lang
