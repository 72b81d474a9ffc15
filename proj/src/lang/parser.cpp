#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qnsim/lang/ast.hpp"

namespace qnsim::lang {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool is_ident(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

bool is_int_literal(const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

// Splits on commas that are not nested inside (), [] or <>.
std::vector<std::string> split_top_level(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(' || c == '[' || c == '<') depth++;
        if (c == ')' || c == ']' || c == '>') depth--;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::string last = trim(cur);
    if (!last.empty() || !out.empty()) out.push_back(last);
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

struct Parser {
    std::string origin;
    std::vector<std::string> lines;
    size_t pos = 0; // next line index
    Program prog;

    [[noreturn]] void fail(size_t line_no, const std::string& msg) const {
        throw SetupError(origin + ":" + std::to_string(line_no + 1) + ": " + msg);
    }

    static std::string strip_comment(const std::string& line) {
        size_t c = line.find("//");
        return c == std::string::npos ? line : line.substr(0, c);
    }

    // Returns the next non-empty line without consuming it; empty optional at EOF.
    std::optional<std::pair<size_t, std::string>> peek() {
        size_t p = pos;
        while (p < lines.size()) {
            std::string t = trim(strip_comment(lines[p]));
            if (!t.empty()) return std::make_pair(p, t);
            p++;
        }
        return std::nullopt;
    }

    std::optional<std::pair<size_t, std::string>> next() {
        auto r = peek();
        if (r) pos = r->first + 1;
        return r;
    }

    static bool starts_section(const std::string& t) {
        return t == "META_START" || t[0] == '^' || t.rfind("SUBROUTINE", 0) == 0 ||
               t.rfind("REQUEST", 0) == 0;
    }

    Operand parse_operand(size_t ln, const std::string& text) {
        std::string t = trim(text);
        if (t.empty()) fail(ln, "empty operand");
        if (t.front() == '{' && t.back() == '}') {
            std::string name = trim(t.substr(1, t.size() - 2));
            if (!is_ident(name)) fail(ln, "bad template name '" + name + "'");
            return Operand::make_template(name);
        }
        if (is_int_literal(t)) return Operand::make_int(std::stoll(t));
        if (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '-' || t[0] == '+' ||
            t[0] == '.') {
            char* end = nullptr;
            double v = std::strtod(t.c_str(), &end);
            if (end == t.c_str() + t.size()) return Operand::make_float(v);
            fail(ln, "bad numeric literal '" + t + "'");
        }
        if (!is_ident(t)) fail(ln, "bad operand '" + t + "'");
        return Operand::make_var(t);
    }

    // --- structure ---------------------------------------------------------

    void parse_all() {
        bool saw_meta = false;
        while (auto l = next()) {
            const auto& [ln, t] = *l;
            if (t == "META_START") {
                if (saw_meta) fail(ln, "duplicate META section");
                saw_meta = true;
                parse_meta();
            } else if (t[0] == '^') {
                parse_block(ln, t);
            } else if (t.rfind("SUBROUTINE", 0) == 0) {
                parse_subroutine(ln, t);
            } else if (t.rfind("REQUEST", 0) == 0) {
                parse_request(ln, t);
            } else {
                fail(ln, "expected META_START, ^block, SUBROUTINE or REQUEST; got '" + t + "'");
            }
        }
        if (!saw_meta) throw SetupError(origin + ": missing META section");
        if (prog.blocks.empty()) throw SetupError(origin + ": program has no blocks");
    }

    static std::pair<std::string, std::string> split_kv(const std::string& t) {
        size_t c = t.find(':');
        if (c == std::string::npos) return {"", ""};
        return {trim(t.substr(0, c)), trim(t.substr(c + 1))};
    }

    void parse_socket_table(size_t ln, const std::string& value, std::map<int, std::string>& out) {
        for (const auto& item : split_top_level(value)) {
            size_t arrow = item.find("->");
            if (arrow == std::string::npos) fail(ln, "socket entry must be '<id> -> <node>'");
            std::string id_s = trim(item.substr(0, arrow));
            std::string node = trim(item.substr(arrow + 2));
            if (!is_int_literal(id_s) || !is_ident(node))
                fail(ln, "bad socket entry '" + item + "'");
            int id = static_cast<int>(std::stoll(id_s));
            if (out.count(id)) fail(ln, "duplicate socket id " + id_s);
            out[id] = node;
        }
    }

    void parse_meta() {
        while (auto l = next()) {
            const auto& [ln, t] = *l;
            if (t == "META_END") return;
            auto [key, value] = split_kv(t);
            if (key.empty()) fail(ln, "expected 'key: value' in META section");
            if (key == "name") {
                if (!is_ident(value)) fail(ln, "bad program name '" + value + "'");
                prog.meta.name = value;
            } else if (key == "parameters") {
                for (const auto& p : split_top_level(value)) {
                    if (!is_ident(p)) fail(ln, "bad parameter name '" + p + "'");
                    prog.meta.params.push_back(p);
                }
            } else if (key == "csockets") {
                parse_socket_table(ln, value, prog.meta.csockets);
            } else if (key == "epr_sockets") {
                parse_socket_table(ln, value, prog.meta.epr_sockets);
            } else {
                fail(ln, "unknown META key '" + key + "'");
            }
        }
        throw SetupError(origin + ": unterminated META section");
    }

    // --- blocks --------------------------------------------------------------

    void parse_block(size_t ln, const std::string& header) {
        Block blk;
        size_t brace = header.find('{');
        if (brace == std::string::npos || header.back() != ':' ||
            header.find('}') == std::string::npos)
            fail(ln, "block header must be '^name {type = T, ...}:'");
        blk.name = trim(header.substr(1, brace - 1));
        if (!is_ident(blk.name)) fail(ln, "bad block name '" + blk.name + "'");
        size_t close = header.rfind('}');
        std::string inside = header.substr(brace + 1, close - brace - 1);
        bool have_type = false;
        for (const auto& item : split_top_level(inside)) {
            size_t eq = item.find('=');
            if (eq == std::string::npos) fail(ln, "block attribute must be 'key = value'");
            std::string key = trim(item.substr(0, eq));
            std::string value = trim(item.substr(eq + 1));
            if (key == "type") {
                auto bt = block_type_from_name(value);
                if (!bt) fail(ln, "unknown block type '" + value + "'");
                blk.type = *bt;
                have_type = true;
            } else if (key == "deadlines") {
                if (value.size() < 2 || value.front() != '[' || value.back() != ']')
                    fail(ln, "deadlines must be '[block: expr, ...]'");
                for (const auto& d : split_top_level(value.substr(1, value.size() - 2))) {
                    auto [ref, expr] = split_kv(d);
                    if (!is_ident(ref)) fail(ln, "bad deadline reference '" + d + "'");
                    try {
                        blk.deadlines.push_back({ref, parse_time_expr(expr, "deadline")});
                    } catch (const SetupError& e) {
                        fail(ln, e.what());
                    }
                }
            } else if (key == "time_hint") {
                try {
                    blk.time_hint = parse_time_expr(value, "time_hint");
                } catch (const SetupError& e) {
                    fail(ln, e.what());
                }
            } else {
                fail(ln, "unknown block attribute '" + key + "'");
            }
        }
        if (!have_type) fail(ln, "block header missing 'type'");

        while (auto l = peek()) {
            const auto& [iln, t] = *l;
            if (starts_section(t)) break;
            pos = iln + 1;
            blk.instrs.push_back(parse_host_instr(iln, t));
        }
        if (prog.find_block(blk.name)) fail(ln, "duplicate block name '" + blk.name + "'");
        prog.blocks.push_back(std::move(blk));
    }

    HostInstr parse_host_instr(size_t ln, const std::string& text) {
        HostInstr ins;
        std::string rhs = text;
        size_t paren = text.find('(');
        if (paren == std::string::npos) fail(ln, "host instruction must contain '(...)'");
        size_t eq = text.find('=');
        if (eq != std::string::npos && eq < paren) {
            std::string dst = trim(text.substr(0, eq));
            rhs = trim(text.substr(eq + 1));
            if (dst.rfind("tuple<", 0) == 0 && dst.back() == '>') {
                ins.dst_is_tuple = true;
                for (const auto& n : split_top_level(dst.substr(6, dst.size() - 7))) {
                    if (!is_ident(n)) fail(ln, "bad tuple element '" + n + "'");
                    ins.dst.push_back(n);
                }
                if (ins.dst.empty()) fail(ln, "empty tuple destination");
            } else if (dst.size() > 2 && dst.substr(dst.size() - 2) == "<>") {
                ins.dst_is_vector = true;
                std::string n = trim(dst.substr(0, dst.size() - 2));
                if (!is_ident(n)) fail(ln, "bad vector destination '" + dst + "'");
                ins.dst.push_back(n);
            } else {
                if (!is_ident(dst)) fail(ln, "bad destination '" + dst + "'");
                ins.dst.push_back(dst);
            }
        }

        paren = rhs.find('(');
        if (paren == std::string::npos) fail(ln, "host instruction must contain '(...)'");
        std::string opname = trim(rhs.substr(0, paren));
        auto op = host_op_from_name(opname);
        if (!op) fail(ln, "unknown host instruction '" + opname + "'");
        ins.op = *op;

        size_t close = rhs.rfind(')');
        if (close == std::string::npos || close < paren) fail(ln, "unbalanced parentheses");
        std::string arg_text = rhs.substr(paren + 1, close - paren - 1);
        std::string tail = trim(rhs.substr(close + 1));

        std::vector<Operand> args;
        for (const auto& a : split_top_level(arg_text)) args.push_back(parse_operand(ln, a));

        std::string attach;
        if (!tail.empty()) {
            if (tail[0] != ':') fail(ln, "unexpected text after ')': '" + tail + "'");
            attach = trim(tail.substr(1));
            if (attach.empty()) fail(ln, "empty attachment after ':'");
        }

        switch (ins.op) {
        case HostOp::Assign:
            if (!args.empty()) fail(ln, "assign takes no arguments");
            if (attach.empty()) fail(ln, "assign needs a literal after ':'");
            ins.literal = parse_operand(ln, attach);
            if (ins.literal.kind == Operand::Kind::Var)
                fail(ln, "assign literal must be a number or template");
            break;
        case HostOp::RunRoutine:
        case HostOp::SubmitRoutine:
        case HostOp::RunRequest:
        case HostOp::SubmitRequest:
            if (attach.empty()) fail(ln, std::string(host_op_name(ins.op)) + " needs ': <routine>'");
            if (!is_ident(attach)) fail(ln, "bad routine name '" + attach + "'");
            ins.routine = attach;
            if (is_request_call(ins.op) && !args.empty())
                fail(ln, "request calls take no arguments");
            break;
        case HostOp::Jmp:
        case HostOp::Beq:
        case HostOp::Bne:
        case HostOp::Blt:
        case HostOp::Bge: {
            size_t want = ins.op == HostOp::Jmp ? 1 : 3;
            if (args.size() != want)
                fail(ln, std::string(host_op_name(ins.op)) + " takes " + std::to_string(want) +
                             " argument(s)");
            Operand tgt = args.back();
            args.pop_back();
            if (tgt.kind != Operand::Kind::Var) fail(ln, "branch target must be a block name");
            ins.target_block = tgt.name;
            if (!attach.empty()) fail(ln, "branches take no ':' attachment");
            break;
        }
        default:
            if (!attach.empty()) fail(ln, std::string(host_op_name(ins.op)) + " takes no ':' attachment");
            break;
        }
        ins.args = std::move(args);

        // Destination arity.
        size_t ndst = ins.dst.size();
        switch (ins.op) {
        case HostOp::Assign:
        case HostOp::Add:
        case HostOp::Sub:
        case HostOp::Mul:
        case HostOp::Div:
        case HostOp::Index:
        case HostOp::RecvCMsg:
            if (ndst != 1 || ins.dst_is_tuple) fail(ln, "instruction needs one scalar destination");
            break;
        case HostOp::Vec:
            if (ndst != 1 || !ins.dst_is_vector) fail(ln, "vector needs a 'name<>' destination");
            break;
        case HostOp::Unpack:
            if (!ins.dst_is_tuple) fail(ln, "unpack needs a 'tuple<...>' destination");
            break;
        default:
            if (ndst != 0) fail(ln, "instruction does not produce a value");
            break;
        }

        // Simple arity checks for the value ops.
        auto need = [&](size_t n) {
            if (ins.args.size() != n)
                fail(ln, std::string(host_op_name(ins.op)) + " takes " + std::to_string(n) +
                             " argument(s)");
        };
        switch (ins.op) {
        case HostOp::Add:
        case HostOp::Sub:
        case HostOp::Mul:
        case HostOp::Div:
        case HostOp::Index:
        case HostOp::SendCMsg: need(2); break;
        case HostOp::RecvCMsg:
        case HostOp::Unpack: need(1); break;
        case HostOp::JoinRoutines: need(0); break;
        default: break;
        }
        return ins;
    }

    // --- quantum routines -------------------------------------------------------

    static std::vector<int> parse_int_list(const std::string& value) {
        std::vector<int> out;
        for (const auto& item : split_top_level(value)) {
            if (!is_int_literal(item)) throw SetupError("bad integer '" + item + "'");
            out.push_back(static_cast<int>(std::stoll(item)));
        }
        return out;
    }

    void parse_subroutine(size_t ln, const std::string& header) {
        auto parts = split_top_level(trim(header.substr(10)), ' ');
        if (parts.size() != 1 || !is_ident(parts[0])) fail(ln, "SUBROUTINE needs a name");
        LocalRoutine lr;
        lr.name = parts[0];

        bool body_done = false;
        while (auto l = peek()) {
            const auto& [iln, t] = *l;
            if (t == "NETQASM_START") {
                pos = iln + 1;
                parse_netqasm_body(lr.body);
                body_done = true;
                break;
            }
            if (starts_section(t)) break;
            pos = iln + 1;
            auto [key, value] = split_kv(t);
            if (key == "params") {
                for (const auto& p : split_top_level(value)) {
                    if (!is_ident(p)) fail(iln, "bad parameter name '" + p + "'");
                    lr.params.push_back(p);
                }
            } else if (key == "returns") {
                for (const auto& r : split_top_level(value)) {
                    if (!is_ident(r)) fail(iln, "bad return name '" + r + "'");
                    lr.returns.push_back(r);
                }
            } else if (key == "uses") {
                try {
                    lr.uses = parse_int_list(value);
                } catch (const SetupError& e) {
                    fail(iln, e.what());
                }
            } else if (key == "keeps") {
                try {
                    lr.keeps = parse_int_list(value);
                } catch (const SetupError& e) {
                    fail(iln, e.what());
                }
            } else {
                fail(iln, "unknown subroutine key '" + key + "'");
            }
        }
        if (!body_done) fail(ln, "subroutine '" + lr.name + "' has no NETQASM body");
        if (prog.find_routine(lr.name)) fail(ln, "duplicate subroutine '" + lr.name + "'");
        prog.routines.push_back(std::move(lr));
    }

    void parse_netqasm_body(std::vector<NqInstr>& body) {
        while (auto l = next()) {
            const auto& [ln, t] = *l;
            if (t == "NETQASM_END") return;
            std::istringstream is(t);
            NqInstr ins;
            is >> ins.mnemonic;
            std::string tok;
            while (is >> tok) ins.args.push_back(parse_nq_arg(ln, tok));
            body.push_back(std::move(ins));
        }
        throw SetupError(origin + ": unterminated NETQASM body");
    }

    NqArg parse_nq_arg(size_t ln, const std::string& tok) {
        NqArg a;
        if (tok[0] == '@') {
            size_t br = tok.find('[');
            if (br == std::string::npos || tok.back() != ']')
                fail(ln, "memory operand must be '@array[index]'");
            a.kind = NqArg::Kind::Addr;
            a.array = tok.substr(1, br - 1);
            if (!is_ident(a.array)) fail(ln, "bad array name '" + a.array + "'");
            std::string idx = tok.substr(br + 1, tok.size() - br - 2);
            int r = reg_index(idx);
            if (r >= 0) {
                a.idx_is_reg = true;
                a.idx_reg = r;
            } else if (is_int_literal(idx)) {
                a.idx_imm = std::stoll(idx);
                if (a.idx_imm < 0) fail(ln, "negative array index");
            } else {
                fail(ln, "bad array index '" + idx + "'");
            }
            return a;
        }
        if (tok.front() == '{' && tok.back() == '}') {
            a.kind = NqArg::Kind::Template;
            a.tpl = trim(tok.substr(1, tok.size() - 2));
            if (!is_ident(a.tpl)) fail(ln, "bad template name '" + a.tpl + "'");
            return a;
        }
        int r = reg_index(tok);
        if (r >= 0) return NqArg::make_reg(r);
        if (is_int_literal(tok)) return NqArg::make_imm(std::stoll(tok));
        fail(ln, "bad operand '" + tok + "'");
    }

    // --- request routines ----------------------------------------------------------

    void parse_request(size_t ln, const std::string& header) {
        auto parts = split_top_level(trim(header.substr(7)), ' ');
        if (parts.size() != 1 || !is_ident(parts[0])) fail(ln, "REQUEST needs a name");
        RequestRoutine rr;
        rr.name = parts[0];
        rr.num_pairs = Operand::make_int(1);
        rr.remote_id = Operand::make_int(-1);
        bool have_remote = false, have_typ = false, have_role = false;

        while (auto l = peek()) {
            const auto& [iln, t] = *l;
            if (starts_section(t)) break;
            pos = iln + 1;
            auto [key, value] = split_kv(t);
            if (key.empty()) fail(iln, "expected 'key: value' in REQUEST section");
            if (key == "callback_type") {
                if (value == "sequential") rr.callback_type = CallbackType::Sequential;
                else if (value == "wait_all") rr.callback_type = CallbackType::WaitAll;
                else if (value.empty() || value == "none") rr.callback_type = CallbackType::None;
                else fail(iln, "unknown callback_type '" + value + "'");
            } else if (key == "callback") {
                if (!value.empty() && !is_ident(value)) fail(iln, "bad callback name");
                rr.callback = value;
            } else if (key == "returns") {
                for (const auto& r : split_top_level(value)) {
                    std::string n = r;
                    if (n.size() > 2 && n.substr(n.size() - 2) == "<>") {
                        rr.returns_vector = true;
                        n = trim(n.substr(0, n.size() - 2));
                    }
                    if (!is_ident(n)) fail(iln, "bad return name '" + r + "'");
                    rr.returns.push_back(n);
                }
                if (rr.returns_vector && rr.returns.size() != 1)
                    fail(iln, "vector returns must be a single 'name<>'");
            } else if (key == "remote_id") {
                rr.remote_id = parse_operand(iln, value);
                if (rr.remote_id.kind == Operand::Kind::Var ||
                    rr.remote_id.kind == Operand::Kind::Float)
                    fail(iln, "remote_id must be an integer or template");
                have_remote = true;
            } else if (key == "epr_socket_id") {
                if (!is_int_literal(value)) fail(iln, "epr_socket_id must be an integer");
                rr.epr_socket = static_cast<int>(std::stoll(value));
            } else if (key == "num_pairs") {
                rr.num_pairs = parse_operand(iln, value);
                if (rr.num_pairs.kind == Operand::Kind::Var ||
                    rr.num_pairs.kind == Operand::Kind::Float)
                    fail(iln, "num_pairs must be an integer or template");
            } else if (key == "virt_ids") {
                parse_virt_ids(iln, value, rr.virt_ids);
            } else if (key == "fidelity") {
                char* end = nullptr;
                rr.min_fidelity = std::strtod(value.c_str(), &end);
                if (value.empty() || end != value.c_str() + value.size())
                    fail(iln, "bad fidelity '" + value + "'");
            } else if (key == "typ") {
                if (value == "create_keep") rr.typ = RequestType::CreateKeep;
                else if (value == "measure_directly") rr.typ = RequestType::MeasureDirectly;
                else if (value == "rsp" || value == "remote_state_prep")
                    rr.typ = RequestType::RemoteStatePrep;
                else fail(iln, "unknown request type '" + value + "'");
                have_typ = true;
            } else if (key == "role") {
                if (value == "create" || value == "sender") rr.role = RequestRole::Create;
                else if (value == "receive" || value == "receiver") rr.role = RequestRole::Receive;
                else fail(iln, "unknown role '" + value + "'");
                have_role = true;
            } else {
                fail(iln, "unknown request key '" + key + "'");
            }
        }
        if (!have_remote) fail(ln, "request '" + rr.name + "' missing remote_id");
        if (!have_typ) fail(ln, "request '" + rr.name + "' missing typ");
        if (!have_role) fail(ln, "request '" + rr.name + "' missing role");
        if (prog.find_request(rr.name)) fail(ln, "duplicate request '" + rr.name + "'");
        prog.requests.push_back(std::move(rr));
    }

    void parse_virt_ids(size_t ln, const std::string& value, VirtIdSpec& spec) {
        std::istringstream is(value);
        std::string mode;
        is >> mode;
        if (mode == "all" || mode == "increment") {
            spec.mode = mode == "all" ? VirtIdSpec::Mode::All : VirtIdSpec::Mode::Increment;
            std::string base;
            if (!(is >> base) || !is_int_literal(base)) fail(ln, "virt_ids needs a base id");
            spec.base = std::stoll(base);
            std::string extra;
            if (is >> extra) fail(ln, "unexpected text after virt_ids base");
        } else if (mode == "custom") {
            spec.mode = VirtIdSpec::Mode::Custom;
            std::string rest;
            std::getline(is, rest);
            for (const auto& item : split_top_level(rest)) {
                if (!is_int_literal(item)) fail(ln, "bad virt id '" + item + "'");
                spec.list.push_back(std::stoll(item));
            }
            if (spec.list.empty()) fail(ln, "custom virt_ids needs at least one id");
        } else {
            fail(ln, "virt_ids must be 'all <id>', 'increment <id>' or 'custom <ids>'");
        }
    }
};

} // namespace

TimeExpr parse_time_expr(const std::string& text, const std::string& context) {
    std::string t = trim(text);
    if (t.empty()) throw SetupError(context + ": empty duration");
    TimeExpr e;
    size_t star = t.find('*');
    if (star != std::string::npos) {
        std::string num = trim(t.substr(0, star));
        std::string sym = trim(t.substr(star + 1));
        char* end = nullptr;
        e.factor = std::strtod(num.c_str(), &end);
        if (num.empty() || end != num.c_str() + num.size())
            throw SetupError(context + ": bad duration factor '" + num + "'");
        if (!is_ident(sym)) throw SetupError(context + ": bad duration symbol '" + sym + "'");
        e.symbol = sym;
        return e;
    }
    if (is_ident(t) && !std::isdigit(static_cast<unsigned char>(t[0]))) {
        e.factor = 1.0;
        e.symbol = t;
        return e;
    }
    // <number> or <number><unit>
    char* end = nullptr;
    e.factor = std::strtod(t.c_str(), &end);
    if (end == t.c_str()) throw SetupError(context + ": bad duration '" + t + "'");
    std::string unit = trim(std::string(end));
    if (unit == "ns" || unit.empty()) {
        // already ns
    } else if (unit == "us") {
        e.factor *= 1e3;
    } else if (unit == "ms") {
        e.factor *= 1e6;
    } else if (unit == "s") {
        e.factor *= 1e9;
    } else {
        throw SetupError(context + ": unknown duration unit '" + unit + "'");
    }
    return e;
}

Program parse_program(const std::string& text, const std::string& origin) {
    Parser p;
    p.origin = origin;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) p.lines.push_back(line);
    p.parse_all();
    return std::move(p.prog);
}

Program parse_program_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SetupError("cannot open program file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_program(ss.str(), path);
}

} // namespace qnsim::lang
