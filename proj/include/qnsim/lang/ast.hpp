#pragma once
// Abstract syntax for node programs.
//
// A program file has three parts:
//   * a META_START/META_END header (name, parameters, classical and EPR
//     socket tables),
//   * host blocks introduced by `^name {type = T}:` containing host
//     instructions executed on the classical processor,
//   * local routines (SUBROUTINE ... NETQASM_START/NETQASM_END) and request
//     routines (REQUEST ...) executed on the quantum processor.
//
// Host instruction syntax is `[dst =] op(args...) [: attachment]`; the
// attachment names a routine for call instructions and carries the literal
// for `assign`. `{name}` placeholders are template values substituted at
// instantiation time.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnsim/common.hpp"
#include "qnsim/ehi/ehi.hpp"

namespace qnsim::lang {

// --- operands ----------------------------------------------------------------

struct Operand {
    enum class Kind { Int, Float, Var, Template };
    Kind kind = Kind::Int;
    i64 ival = 0;
    double fval = 0.0;
    std::string name; // variable or template name

    static Operand make_int(i64 v);
    static Operand make_float(double v);
    static Operand make_var(std::string n);
    static Operand make_template(std::string n);
    bool operator==(const Operand&) const = default;
};

// --- host instructions ---------------------------------------------------------

enum class HostOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Vec,     // vector construction
    Index,   // vector element read
    Unpack,  // tuple assignment from a vector
    SendCMsg,
    RecvCMsg,
    RunRoutine,
    RunRequest,
    SubmitRoutine,
    SubmitRequest,
    JoinRoutines,
    ReturnResult,
    Jmp,
    Beq,
    Bne,
    Blt,
    Bge,
};

const char* host_op_name(HostOp op);
std::optional<HostOp> host_op_from_name(const std::string& name);
bool is_branch(HostOp op);
bool is_routine_call(HostOp op); // RunRoutine/SubmitRoutine/JoinRoutines
bool is_request_call(HostOp op); // RunRequest/SubmitRequest

struct HostInstr {
    HostOp op = HostOp::Assign;
    std::vector<std::string> dst; // one name, or the names of a tuple destination
    bool dst_is_vector = false;   // destination was written `name<>`
    bool dst_is_tuple = false;    // destination was written `tuple<a, b>`
    std::vector<Operand> args;
    std::string routine;     // attachment for call instructions
    Operand literal;         // attachment for assign
    std::string target_block; // jumps and branches

    bool operator==(const HostInstr&) const = default;
};

// --- blocks ------------------------------------------------------------------

enum class BlockType { CL, CC, QL, QC };

const char* block_type_name(BlockType t);
std::optional<BlockType> block_type_from_name(const std::string& name);

// Duration expression: `<number>` (ns), `<number><unit>`, `<number> * <symbol>`
// or a bare symbol; symbols resolve against a node's hardware description.
struct TimeExpr {
    double factor = 0.0;
    std::string symbol; // empty: `factor` is already nanoseconds

    time_ns resolve(const ehi::SymbolTable& syms, const std::string& context) const;
    std::string to_string() const;
    bool operator==(const TimeExpr&) const = default;
};

TimeExpr parse_time_expr(const std::string& text, const std::string& context);

struct DeadlineRef {
    std::string block; // reference block whose completion starts the clock
    TimeExpr expr;
    bool operator==(const DeadlineRef&) const = default;
};

struct Block {
    std::string name;
    BlockType type = BlockType::CL;
    std::vector<DeadlineRef> deadlines;
    std::optional<TimeExpr> time_hint;
    std::vector<HostInstr> instrs;
    bool operator==(const Block&) const = default;
};

// --- quantum routine bodies -----------------------------------------------------

// Register file layout: R0-R15 -> 0-15, C0-C15 -> 16-31, M0-M15 -> 32-47,
// Q0-Q15 -> 48-63. The classes are naming convention only.
constexpr int kNumRegisters = 64;
int reg_index(const std::string& name); // -1 if not a register name
std::string reg_name(int index);

struct NqArg {
    enum class Kind { Reg, Imm, Template, Addr };
    Kind kind = Kind::Imm;
    int reg = -1;
    i64 imm = 0;
    std::string tpl;
    // Addr: @array[index]
    std::string array;
    bool idx_is_reg = false;
    int idx_reg = -1;
    i64 idx_imm = 0;

    static NqArg make_reg(int r);
    static NqArg make_imm(i64 v);
    bool operator==(const NqArg&) const = default;
};

struct NqInstr {
    std::string mnemonic;
    std::vector<NqArg> args;
    bool operator==(const NqInstr&) const = default;
};

struct LocalRoutine {
    std::string name;
    std::vector<std::string> params;  // values delivered through @input
    std::vector<std::string> returns; // host names for @output values
    std::vector<int> uses;            // virtual qubit ids touched
    std::vector<int> keeps;           // subset of `uses` that stays allocated
    std::vector<NqInstr> body;
    bool operator==(const LocalRoutine&) const = default;
};

// --- request routines -----------------------------------------------------------

enum class CallbackType { None, Sequential, WaitAll };
enum class RequestType { CreateKeep, MeasureDirectly, RemoteStatePrep };
enum class RequestRole { Create, Receive };

struct VirtIdSpec {
    enum class Mode { All, Increment, Custom };
    Mode mode = Mode::All;
    i64 base = 0;          // All/Increment
    std::vector<i64> list; // Custom

    // Virtual qubit id used for pair `index`.
    i64 id_for_pair(i64 index) const;
    bool operator==(const VirtIdSpec&) const = default;
};

struct RequestRoutine {
    std::string name;
    CallbackType callback_type = CallbackType::None;
    std::string callback; // local routine name, empty if none
    std::vector<std::string> returns;
    bool returns_vector = false; // returns were written `name<>`
    Operand remote_id;           // node id (int or template)
    int epr_socket = 0;
    Operand num_pairs;
    VirtIdSpec virt_ids;
    double min_fidelity = 1.0;
    RequestType typ = RequestType::CreateKeep;
    RequestRole role = RequestRole::Create;
    bool operator==(const RequestRoutine&) const = default;

    // Pair count once templates are resolved; throws SetupError otherwise.
    int concrete_pairs() const;
};

// --- program ---------------------------------------------------------------------

struct ProgramMeta {
    std::string name;
    std::vector<std::string> params;
    std::map<int, std::string> csockets;    // socket id -> remote node name
    std::map<int, std::string> epr_sockets; // socket id -> remote node name
    bool operator==(const ProgramMeta&) const = default;
};

struct Program {
    ProgramMeta meta;
    std::vector<Block> blocks; // the first block is the entry point
    std::vector<LocalRoutine> routines;
    std::vector<RequestRoutine> requests;

    const Block* find_block(const std::string& name) const;
    int block_index(const std::string& name) const; // -1 if absent
    const LocalRoutine* find_routine(const std::string& name) const;
    const RequestRoutine* find_request(const std::string& name) const;
    bool operator==(const Program&) const = default;
};

// --- front-end entry points -------------------------------------------------------

// Parses program text; throws SetupError with file:line context on different
// malformed input.
Program parse_program(const std::string& text, const std::string& origin);
Program parse_program_file(const std::string& path);

// Pretty-prints to the same text format (parse . print is the identity on
// the AST).
std::string print_program(const Program& prog);

// Structural validation: block typing rules, socket references, routine
// references, uses/keeps consistency, body well-formedness, template scope.
DiagList validate_program(const Program& prog);

// A program with all templates substituted and timing metadata resolved.
struct InstantiatedProgram {
    Program prog;
    std::map<std::string, i64> inputs;
    // block name -> (reference block -> relative deadline in ns)
    std::map<std::string, std::vector<std::pair<std::string, time_ns>>> deadlines_ns;
    std::map<std::string, time_ns> time_hints_ns;
};

InstantiatedProgram instantiate(const Program& prog,
                                const std::map<std::string, i64>& inputs,
                                const ehi::SymbolTable& syms);

} // namespace qnsim::lang
