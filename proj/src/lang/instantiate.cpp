#include <algorithm>

#include "qnsim/lang/ast.hpp"

namespace qnsim::lang {

namespace {

i64 lookup_input(const std::map<std::string, i64>& inputs, const std::string& name,
                 const std::string& where) {
    auto it = inputs.find(name);
    if (it == inputs.end())
        throw SetupError(where + ": no value supplied for template '{" + name + "}'");
    return it->second;
}

void subst_operand(Operand& o, const std::map<std::string, i64>& inputs,
                   const std::string& where) {
    if (o.kind == Operand::Kind::Template)
        o = Operand::make_int(lookup_input(inputs, o.name, where));
}

void subst_nq_arg(NqArg& a, const std::map<std::string, i64>& inputs, const std::string& where) {
    if (a.kind == NqArg::Kind::Template) {
        i64 v = lookup_input(inputs, a.tpl, where);
        a = NqArg::make_imm(v);
    }
}

} // namespace

InstantiatedProgram instantiate(const Program& prog, const std::map<std::string, i64>& inputs,
                                const ehi::SymbolTable& syms) {
    const std::string where = "program " + prog.meta.name;
    for (const auto& [k, v] : inputs) {
        (void)v;
        if (std::find(prog.meta.params.begin(), prog.meta.params.end(), k) ==
            prog.meta.params.end())
            throw SetupError(where + ": input '" + k + "' is not a declared parameter");
    }
    for (const auto& p : prog.meta.params) lookup_input(inputs, p, where);

    InstantiatedProgram out;
    out.prog = prog;
    out.inputs = inputs;

    for (auto& blk : out.prog.blocks) {
        const std::string bw = where + " block " + blk.name;
        for (auto& ins : blk.instrs) {
            for (auto& a : ins.args) subst_operand(a, inputs, bw);
            subst_operand(ins.literal, inputs, bw);
        }
        std::vector<std::pair<std::string, time_ns>> dl;
        for (const auto& d : blk.deadlines) dl.push_back({d.block, d.expr.resolve(syms, bw)});
        if (!dl.empty()) out.deadlines_ns[blk.name] = std::move(dl);
        if (blk.time_hint) out.time_hints_ns[blk.name] = blk.time_hint->resolve(syms, bw);
    }
    for (auto& lr : out.prog.routines) {
        const std::string rw = where + " subroutine " + lr.name;
        for (auto& ins : lr.body)
            for (auto& a : ins.args) subst_nq_arg(a, inputs, rw);
    }
    for (auto& rr : out.prog.requests) {
        const std::string rw = where + " request " + rr.name;
        subst_operand(rr.remote_id, inputs, rw);
        subst_operand(rr.num_pairs, inputs, rw);
        i64 n = rr.num_pairs.ival;
        if (n < 1) throw SetupError(rw + ": num_pairs must be at least 1");
        if (rr.typ == RequestType::MeasureDirectly && !rr.returns_vector &&
            !rr.returns.empty() && static_cast<i64>(rr.returns.size()) != n)
            throw SetupError(rw + ": measure_directly with " + std::to_string(n) +
                             " pairs needs one return name per pair (or a vector return)");
        if (rr.virt_ids.mode == VirtIdSpec::Mode::Custom &&
            static_cast<i64>(rr.virt_ids.list.size()) < n)
            throw SetupError(rw + ": custom virt_ids lists fewer ids than num_pairs");
    }
    return out;
}

} // namespace qnsim::lang
