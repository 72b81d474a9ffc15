#include <doctest.h>

#include "qnsim/ehi/ehi.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/mem/memory.hpp"
#include "qnsim/nqasm/vm.hpp"
#include "qnsim/qsim/backend.hpp"

using namespace qnsim;

namespace {

// Pushes relaxation times out so that plumbing tests stay deterministic;
// decoherence physics has its own statistics tests at the backend level.
ehi::NodeInfo relaxed(ehi::NodeInfo n) {
    for (auto& q : n.qubits) {
        q.t1 = 1e18;
        q.t2 = 1e18;
    }
    return n;
}

// Wraps a routine body in a minimal program and returns the parsed routine.
lang::Program parse_routine(const std::string& keys_and_body) {
    std::string text = "META_START\nname: t\nMETA_END\n"
                       "^b {type = QL}:\n  run_routine() : s\n"
                       "SUBROUTINE s\n" +
                       keys_and_body;
    lang::Program p = lang::parse_program(text, "test");
    DiagList d = lang::validate_program(p);
    // Tests may intentionally keep params/returns implicit; only hard
    // violations matter here.
    for (const auto& diag : d) {
        if (diag.message.find("argument(s)") != std::string::npos) continue;
        FAIL_CHECK(diag.where << ": " << diag.message);
    }
    return p;
}

struct VmFixture {
    ehi::NodeInfo node;
    qsim::Backend backend;
    mem::QuantumMemory qmem;
    mem::SharedMemory shm;
    nqasm::NqVm vm;
    Rng rng;

    explicit VmFixture(ehi::NodeInfo n, int num_comm_virt, int num_mem_virt, u64 seed = 7)
        : node(std::move(n)),
          backend(8),
          qmem(node.qubits, ehi::derive_unit_module(node, num_comm_virt, num_mem_virt)),
          vm(backend, qmem, node, make_map()),
          rng(seed) {}

    std::vector<int> make_map() {
        std::vector<int> m;
        for (const auto& q : node.qubits) m.push_back(backend.add_qubit(q.t1, q.t2));
        return m;
    }

    time_ns clock = 0; // physical time only moves forward across runs

    // Allocates the routine's `uses`, fills @input, runs, returns outputs.
    nqasm::ExecResult run(const lang::LocalRoutine& lr, const std::vector<i32>& inputs,
                          std::vector<i32>* outputs = nullptr, int pid = 0) {
        for (int u : lr.uses) {
            if (!qmem.phys_of(pid, u)) qmem.allocate(pid, u);
        }
        std::string ih = "in" + std::to_string(pid), oh = "out" + std::to_string(pid);
        shm.alloc(mem::Region::LRIn, ih, inputs.size());
        for (size_t i = 0; i < inputs.size(); ++i)
            shm.write(mem::Region::LRIn, ih, i, inputs[i], mem::Proc::CPS);
        shm.alloc(mem::Region::LROut, oh, lr.returns.size());
        auto res = vm.run(lr, pid, shm, mem::Region::LRIn, ih, oh, clock, rng);
        clock += res.duration;
        if (outputs) {
            outputs->clear();
            for (size_t i = 0; i < lr.returns.size(); ++i)
                outputs->push_back(shm.read(mem::Region::LROut, oh, i, mem::Proc::CPS));
        }
        shm.free(mem::Region::LRIn, ih);
        shm.free(mem::Region::LROut, oh);
        return res;
    }
};

} // namespace

TEST_CASE("classical core: loop, arithmetic, duration bookkeeping") {
    // sum = 1 + 2 + ... + input[0], then stored.
    lang::Program p = parse_routine(R"(
    params: n
    returns: sum
    uses:
    keeps:
  NETQASM_START
    load R0 @input[0]   // n
    set R1 0            // sum
    set R2 1            // i
    bge R2 R0 4         // while i < n ... (exits to the add of the final term)
    add R1 R1 R2
    add R2 R2 1
    jmp -3
    add R1 R1 R0        // add the final term i == n
    store R1 @output[0]
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0);
    std::vector<i32> out;
    auto res = f.run(p.routines[0], {5}, &out);
    CHECK(out == std::vector<i32>{15});
    // executed: load,set,set + 4*(bge,add,add,jmp) + final bge taken + add + store
    // = 3 + 4*4 + 1 + 2 = 22 instructions, each at qnos latency
    CHECK(res.steps == 22);
    CHECK(res.duration == 22 * f.node.qnos_latency);
}

TEST_CASE("classical core: 32-bit wrapping and C-style division") {
    lang::Program p = parse_routine(R"(
    params: a, b
    returns: q, r, w, m
    uses:
    keeps:
  NETQASM_START
    load R0 @input[0]
    load R1 @input[1]
    div R2 R0 R1
    rem R3 R0 R1
    store R2 @output[0]
    store R3 @output[1]
    set R4 2147483647
    add R4 R4 1
    store R4 @output[2]
    subm R5 1 3 32
    store R5 @output[3]
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0);
    std::vector<i32> out;
    f.run(p.routines[0], {-7, 2}, &out);
    CHECK(out[0] == -3);          // truncating division
    CHECK(out[1] == -1);          // remainder keeps the dividend's sign
    CHECK(out[2] == INT32_MIN);   // wraparound
    CHECK(out[3] == 30);          // modular results are canonicalized to [0, m)
}

TEST_CASE("division by zero and undefined input reads are program errors") {
    lang::Program p = parse_routine(R"(
    params: a
    returns:
    uses:
    keeps:
  NETQASM_START
    load R0 @input[0]
    div R1 R0 0
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0);
    CHECK_THROWS_AS(f.run(p.routines[0], {3}), ExecError);

    lang::Program p2 = parse_routine(R"(
    params: a, b
    returns:
    uses:
    keeps:
  NETQASM_START
    load R0 @input[1]
  NETQASM_END
)");
    VmFixture f2(relaxed(ehi::generic_preset(2)), 2, 0);
    // slot 1 exists (two params) but only slot 0 was written
    f2.shm.alloc(mem::Region::LRIn, "in0", 2);
    f2.shm.write(mem::Region::LRIn, "in0", 0, 1, mem::Proc::CPS);
    f2.shm.alloc(mem::Region::LROut, "out0", 0);
    CHECK_THROWS_AS(f2.vm.run(p2.routines[0], 0, f2.shm, mem::Region::LRIn, "in0", "out0", 0,
                              f2.rng),
                    ExecError);
}

TEST_CASE("step limit stops runaway loops") {
    lang::Program p = parse_routine(R"(
    params:
    returns:
    uses:
    keeps:
  NETQASM_START
    set R0 0
    jmp -1
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0);
    f.vm.set_step_limit(1000);
    CHECK_THROWS_AS(f.run(p.routines[0], {}), ExecError);
}

TEST_CASE("state preparation and matched-basis readout through the VM") {
    // Prepare each of the six cardinal states, rotate it onto |1> with the
    // matched receiver rotation, measure: the outcome is 1 with certainty.
    // prep i:   {0: none, 1: rot_x 16, 2: rot_y 8, 3: rot_y 24, 4: rot_x 24, 5: rot_x 8}
    // readout i:{0: rot_x 16, 1: none, 2: rot_y 8 on -x ... } (inverse pairs below)
    struct Case {
        const char* prep;
        const char* readout;
    };
    const Case cases[] = {
        {"", "    rot_x Q0 16 4\n"},                    // |0>
        {"    rot_x Q0 16 4\n", ""},                    // |1>
        {"    rot_y Q0 8 4\n", "    rot_y Q0 8 4\n"},   // |+>
        {"    rot_y Q0 24 4\n", "    rot_y Q0 24 4\n"}, // |->
        {"    rot_x Q0 24 4\n", "    rot_x Q0 24 4\n"}, // |+i>
        {"    rot_x Q0 8 4\n", "    rot_x Q0 8 4\n"},   // |-i>
    };
    // Readout rotations: the matched-basis convention maps the prepared state
    // to |1>; applying the *same* rotation again works for the four
    // equatorial states (prep maps |0>->s, readout maps s->|1>), and the pole
    // states swap.
    for (int i = 0; i < 6; ++i) {
        VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0, 1234 + static_cast<u64>(i));
        std::string body = "    params:\n    returns: m\n    uses: 0\n    keeps:\n"
                           "  NETQASM_START\n    set Q0 0\n    init Q0\n" +
                           std::string(cases[i].prep) + std::string(cases[i].readout) +
                           "    meas Q0 M0\n    store M0 @output[0]\n  NETQASM_END\n";
        lang::Program p = parse_routine(body);
        std::vector<i32> out;
        for (int rep = 0; rep < 20; ++rep) {
            f.run(p.routines[0], {}, &out, rep);
            CAPTURE(i);
            CHECK(out == std::vector<i32>{1});
            f.qmem.free_instance(rep);
        }
    }
}

TEST_CASE("measurement statistics follow the state") {
    // |+> measured in Z: unbiased coin.
    lang::Program p = parse_routine(R"(
    params:
    returns: m
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    init Q0
    rot_y Q0 8 4
    meas Q0 M0
    store M0 @output[0]
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0, 99);
    int ones = 0;
    const int n = 4000;
    std::vector<i32> out;
    for (int i = 0; i < n; ++i) {
        f.run(p.routines[0], {}, &out);
        ones += out[0];
        f.qmem.free_instance(0);
    }
    // 5 sigma around p = 1/2
    CHECK(ones > n / 2 - 5 * 32);
    CHECK(ones < n / 2 + 5 * 32);
}

TEST_CASE("gate timing: durations accumulate and decoherence tracks the clock") {
    lang::Program p = parse_routine(R"(
    params:
    returns: m
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    init Q0
    rot_x Q0 16 4
    meas Q0 M0
    store M0 @output[0]
  NETQASM_END
)");
    ehi::NodeInfo node = relaxed(ehi::generic_preset(2));
    VmFixture f(node, 2, 0);
    auto res = f.run(p.routines[0], {});
    const ehi::GateInfo* g = node.find_single("init", true);
    REQUIRE(g != nullptr);
    // set + store at qnos latency, init + rot_x + meas at the single-qubit
    // gate duration
    CHECK(res.duration == 2 * node.qnos_latency + 3 * g->duration);

    CHECK(nqasm::estimate_duration(p.routines[0], node) == res.duration);
}

TEST_CASE("duration estimate sums classical and gate costs") {
    lang::Program p = parse_routine(R"(
    params: a
    returns: m
    uses: 0, 1
    keeps:
  NETQASM_START
    load R0 @input[0]
    set Q0 0
    set Q1 1
    add R1 R0 R0
    jmp 1
    store R1 @output[0]
    init Q0
    rot_x Q0 16 4
    cnot Q0 Q1
    meas Q0 M0
  NETQASM_END
)");
    ehi::NodeInfo node = relaxed(ehi::generic_preset(2));
    // 6 classical at 1000 each; init/rot_x/meas at 5000; cnot at 200000
    CHECK(nqasm::estimate_duration(p.routines[0], node) == 6 * 1000 + 3 * 5000 + 200000);
}

TEST_CASE("entangling gates through the VM: Bell pair correlations") {
    lang::Program p = parse_routine(R"(
    params:
    returns: m0, m1
    uses: 0, 1
    keeps:
  NETQASM_START
    set Q0 0
    set Q1 1
    init Q0
    init Q1
    rot_y Q0 8 4
    cnot Q0 Q1
    meas Q0 M0
    meas Q1 M1
    store M0 @output[0]
    store M1 @output[1]
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0, 4242);
    std::vector<i32> out;
    int ones = 0;
    for (int i = 0; i < 400; ++i) {
        f.run(p.routines[0], {}, &out);
        CHECK(out[0] == out[1]); // Phi+ correlations are perfect
        ones += out[0];
        f.qmem.free_instance(0);
    }
    CHECK(ones > 120); // both branches occur
    CHECK(ones < 280);
}

TEST_CASE("trapped-ion flavour: collective gates compose a controlled flip") {
    // init_all; flip both qubits; then the native sequence equal to a
    // controlled-X with Q0 as control; |11> must end as |10>.
    lang::Program p = parse_routine(R"(
    params:
    returns: m0, m1
    uses: 0, 1
    keeps:
  NETQASM_START
    set Q0 0
    set Q1 1
    init_all
    rot_x_all 16 4
    rot_x_all 8 4
    rot_z Q0 8 4
    rot_x_all 24 4
    bichromatic 8 4
    rot_x_all 24 4
    rot_x_all 8 4
    rot_z Q0 24 4
    rot_x_all 24 4
    meas_all M0
    store M0 @output[0]
    store M1 @output[1]
  NETQASM_END
)");
    ehi::NodeInfo node = relaxed(ehi::trapped_ion_preset(2));
    for (u64 seed = 0; seed < 10; ++seed) {
        VmFixture f(node, 2, 0, seed);
        std::vector<i32> out;
        f.run(p.routines[0], {}, &out);
        CHECK(out == std::vector<i32>{1, 0});
    }
}

TEST_CASE("collective gates touch only the instance's allocated qubits") {
    lang::Program p = parse_routine(R"(
    params:
    returns: m0, m1
    uses: 0, 1
    keeps:
  NETQASM_START
    init_all
    rot_x_all 16 4
    meas_all M0
    store M0 @output[0]
    store M1 @output[1]
  NETQASM_END
)");
    ehi::NodeInfo node = relaxed(ehi::trapped_ion_preset(4));
    VmFixture f(node, 4, 0, 5);
    // another instance holds qubits too; they must stay untouched
    f.qmem.allocate(9, 0);
    int other_phys = *f.qmem.phys_of(9, 0);
    f.backend.reset(other_phys, 0);

    std::vector<i32> out;
    f.run(p.routines[0], {}, &out);
    CHECK(out == std::vector<i32>{1, 1});
    CHECK(f.backend.measure(other_phys, qsim::Basis::Z, 0, f.rng) == 0);
}

TEST_CASE("flavour validation catches missing operations") {
    lang::Program p = parse_routine(R"(
    params:
    returns:
    uses: 0, 1
    keeps:
  NETQASM_START
    set Q0 0
    set Q1 1
    bichromatic 8 4
    cnot Q0 Q1
  NETQASM_END
)");
    ehi::NodeInfo gen = relaxed(ehi::generic_preset(2));
    DiagList d = lang::validate_program(p);
    CHECK(d.empty());
    DiagList fd = nqasm::validate_flavour(p.routines[0], gen);
    REQUIRE(fd.size() == 1); // bichromatic missing, cnot present
    CHECK(fd[0].message.find("bichromatic") != std::string::npos);

    ehi::NodeInfo ion = ehi::trapped_ion_preset(2);
    DiagList fi = nqasm::validate_flavour(p.routines[0], ion);
    REQUIRE(fi.size() == 1); // cnot missing, bichromatic present
    CHECK(fi[0].message.find("cnot") != std::string::npos);
}

TEST_CASE("kind-dependent gate lookup fails cleanly at run time") {
    // A color-center node has rot_z only on storage qubits; running it on the
    // communication qubit is a program error.
    lang::Program p = parse_routine(R"(
    params:
    returns:
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    init Q0
    rot_z Q0 8 4
  NETQASM_END
)");
    ehi::NodeInfo cc = ehi::color_center_preset(2);
    CHECK(nqasm::validate_flavour(p.routines[0], cc).empty()); // exists on storage
    VmFixture f(cc, 1, 2);
    // virt 0 is the communication qubit of the unit module
    CHECK_THROWS_AS(f.run(p.routines[0], {}), ExecError);
}

TEST_CASE("operating on an unallocated qubit is a program error") {
    lang::Program p = parse_routine(R"(
    params:
    returns:
    uses:
    keeps:
  NETQASM_START
    set Q0 3
    init Q0
  NETQASM_END
)");
    VmFixture f(relaxed(ehi::generic_preset(2)), 2, 0);
    CHECK_THROWS_AS(f.run(p.routines[0], {}), ExecError);
}
