// End-to-end tests for the discrete-event simulation: program execution across
// nodes, message timing, scheduling policies, the serial baseline, dynamic
// branching, entanglement requests and callback nesting.
#include <doctest.h>

#include <array>
#include <map>
#include <string>
#include <vector>

#include "qnsim/ehi/ehi.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/net/entdist.hpp"
#include "qnsim/sim/simulation.hpp"
#include "qnsim/task/graph.hpp"

using namespace qnsim;

namespace {

lang::InstantiatedProgram prep(const std::string& text, const ehi::NodeInfo& node,
                               const ehi::LinkInfo* link = nullptr,
                               const std::map<std::string, i64>& inputs = {}) {
    lang::Program p = lang::parse_program(text, "sim_test");
    const DiagList diags = lang::validate_program(p);
    INFO(join_diags(diags));
    REQUIRE(diags.empty());
    return lang::instantiate(p, inputs, ehi::make_symbols(node, link));
}

// Generic hardware with decoherence switched off, for runs whose quantum
// outcomes must be exactly deterministic.
ehi::NodeInfo noiseless(const std::string& name, int num_qubits) {
    ehi::NodeInfo n = ehi::generic_preset(num_qubits);
    n.name = name;
    for (auto& q : n.qubits) {
        q.t1 = kInf;
        q.t2 = kInf;
    }
    return n;
}

ehi::NodeInfo classical_node(const std::string& name) {
    ehi::NodeInfo n = ehi::generic_preset(1);
    n.name = name;
    return n;
}

} // namespace

// ---------------------------------------------------------------------------------
// Pure classical execution and exact host timing.

TEST_CASE("classical program runs to completion with exact host timing") {
    const char* text = R"(
META_START
    name: count
META_END

^b0 {type = CL}:
    a = assign() : 5
    b = add(a, a)
    return_result(b)
)";
    sim::SimConfig cfg;
    sim::Simulation s(cfg);
    const int n0 = s.add_node(classical_node("solo"));
    const auto ip = prep(text, classical_node("solo"));
    const int p0 = s.add_instance(n0, ip);
    const int p1 = s.add_instance(n0, ip);
    s.run();

    CHECK(!s.deadlocked());
    CHECK(s.result(p0).finished);
    CHECK(s.result(p0).results == std::vector<i32>{10});
    // three host instructions at 1000 ns each
    CHECK(s.result(p0).finish == 3000);
    // one processor: the second copy runs strictly after the first
    CHECK(s.result(p1).finish == 6000);
    CHECK(s.makespan() == 6000);
    // a single straight-line classical block is a single task
    CHECK(s.node_graph(n0).size() == 2);
}

// ---------------------------------------------------------------------------------
// Cross-node messaging: blocking receive, wake-up, and latency accounting.

TEST_CASE("ping-pong messages account for channel latency and blocking receives") {
    const char* ping = R"(
META_START
    name: ping
    csockets: 0 -> right
META_END

^b0 {type = CL}:
    x = assign() : 5
    send_cmsg(0, x)

^b1 {type = CC}:
    y = recv_cmsg(0)

^b2 {type = CL}:
    return_result(y)
)";
    const char* pong = R"(
META_START
    name: pong
    csockets: 0 -> left
META_END

^b0 {type = CC}:
    y = recv_cmsg(0)

^b1 {type = CL}:
    one = assign() : 1
    z = add(y, one)
    send_cmsg(0, z)

^b2 {type = CL}:
    return_result(z)
)";
    sim::SimConfig cfg;
    sim::Simulation s(cfg);
    const int na = s.add_node(classical_node("left"));
    const int nb = s.add_node(classical_node("right"));
    ehi::LinkInfo link;
    link.cc_latency = 500;
    s.set_link("left", "right", link);
    const int pa = s.add_instance(na, prep(ping, classical_node("left"), &link));
    const int pb = s.add_instance(nb, prep(pong, classical_node("right"), &link));
    s.pair_instances(pa, pb);
    s.run();

    CHECK(!s.deadlocked());
    CHECK(s.result(pa).results == std::vector<i32>{6});
    CHECK(s.result(pb).results == std::vector<i32>{6});
    // left: assign @1000, send @2000 (lands right @2500).
    // right: receive wakes @2500, instruction done @3500; assign @4500, add @5500,
    // send @6500 (lands left @7000); return @7500.
    CHECK(s.result(pb).finish == 7500);
    // left: receive wakes @7000, done @8000; return @9000.
    CHECK(s.result(pa).finish == 9000);
    CHECK(s.makespan() == 9000);
}

TEST_CASE("mutually blocked receives are reported as a deadlock") {
    const char* one = R"(
META_START
    name: stuck_a
    csockets: 0 -> nodeb
META_END

^b0 {type = CC}:
    m = recv_cmsg(0)

^b1 {type = CL}:
    return_result(m)
)";
    const char* two = R"(
META_START
    name: stuck_b
    csockets: 0 -> nodea
META_END

^b0 {type = CC}:
    m = recv_cmsg(0)

^b1 {type = CL}:
    return_result(m)
)";
    sim::SimConfig cfg;
    cfg.record_trace = true;
    sim::Simulation s(cfg);
    const int na = s.add_node(classical_node("nodea"));
    const int nb = s.add_node(classical_node("nodeb"));
    ehi::LinkInfo link;
    s.set_link("nodea", "nodeb", link);
    const int pa = s.add_instance(na, prep(one, classical_node("nodea"), &link));
    const int pb = s.add_instance(nb, prep(two, classical_node("nodeb"), &link));
    s.pair_instances(pa, pb);
    s.run();

    CHECK(s.deadlocked());
    CHECK(!s.result(pa).finished);
    CHECK(!s.result(pb).finished);
    CHECK(s.makespan() == 0);
    CHECK(s.trace_text().find("wait socket") != std::string::npos);
}

// ---------------------------------------------------------------------------------
// Scheduling policies.

namespace {

std::string busy_program(int assigns) {
    std::string t = "META_START\n    name: busy\nMETA_END\n\n^b0 {type = CL}:\n";
    for (int i = 0; i < assigns; ++i) t += "    k = assign() : 1\n";
    t += "    return_result(k)\n";
    return t;
}

const char* kUrgent = R"(
META_START
    name: urgent
    csockets: 0 -> pinger
META_END

^b0 {type = CC}:
    m = recv_cmsg(0)

^b1 {type = CL, deadlines = [b0: 2000]}:
    r = add(m, m)
    return_result(r)
)";

const char* kDriver = R"(
META_START
    name: driver
    csockets: 0 -> worker
META_END

^b0 {type = CL}:
    x = assign() : 7
    send_cmsg(0, x)
    return_result(x)
)";

} // namespace

TEST_CASE("deadlines preempt long-running work under EDF but not FCFS") {
    auto build = [](sim::Simulation& s) {
        const int na = s.add_node(classical_node("worker"));
        const int nb = s.add_node(classical_node("pinger"));
        ehi::LinkInfo link;
        link.cc_latency = 500;
        s.set_link("worker", "pinger", link);
        const int busy = s.add_instance(na, prep(busy_program(29), classical_node("worker")));
        const int urgent = s.add_instance(na, prep(kUrgent, classical_node("worker"), &link));
        const int driver = s.add_instance(nb, prep(kDriver, classical_node("pinger"), &link));
        s.pair_instances(urgent, driver);
        return std::array<int, 3>{busy, urgent, driver};
    };

    SUBCASE("FCFS runs the long job first and the deadline is ignored") {
        sim::SimConfig cfg;
        cfg.policy = sched::Policy::Fcfs;
        sim::Simulation s(cfg);
        const auto [busy, urgent, driver] = build(s);
        s.run();
        CHECK(!s.deadlocked());
        CHECK(s.result(busy).finish == 30000);
        // the urgent reply waits for the whole busy block despite its deadline
        CHECK(s.result(urgent).finish == 33000);
        CHECK(s.result(urgent).results == std::vector<i32>{14});
        CHECK(s.result(driver).finish == 3000);
        CHECK(s.preemptions() == 0);
    }

    SUBCASE("EDF preempts the long job at an instruction boundary") {
        sim::SimConfig cfg;
        cfg.policy = sched::Policy::Edf;
        sim::Simulation s(cfg);
        const auto [busy, urgent, driver] = build(s);
        s.run();
        CHECK(!s.deadlocked());
        // message lands @2500; the busy block yields at the @3000 boundary,
        // the receive completes @4000 and the deadlined block by @6000
        CHECK(s.result(urgent).finish == 6000);
        CHECK(s.result(urgent).results == std::vector<i32>{14});
        // the busy block loses exactly the 3000 ns the urgent program used
        CHECK(s.result(busy).finish == 33000);
        CHECK(s.preemptions() == 1);
        CHECK(s.makespan() == 33000);
    }
}

TEST_CASE("the serial baseline runs one task at a time even across waits") {
    const char* waiter = R"(
META_START
    name: waiter
    csockets: 0 -> remote
META_END

^b0 {type = CC}:
    y = recv_cmsg(0)

^b1 {type = CL}:
    return_result(y)
)";
    const char* pure = R"(
META_START
    name: pure
META_END

^b0 {type = CL}:
    a = assign() : 5
    b = add(a, a)
    return_result(b)
)";
    const char* sender = R"(
META_START
    name: sender
    csockets: 0 -> local
META_END

^b0 {type = CL}:
    x = assign() : 9
    send_cmsg(0, x)
    return_result(x)
)";
    auto build = [&](sim::Simulation& s) {
        const int na = s.add_node(classical_node("local"));
        const int nb = s.add_node(classical_node("remote"));
        ehi::LinkInfo link;
        link.cc_latency = 500;
        s.set_link("local", "remote", link);
        const int w = s.add_instance(na, prep(waiter, classical_node("local"), &link));
        const int p = s.add_instance(na, prep(pure, classical_node("local")));
        const int d = s.add_instance(nb, prep(sender, classical_node("remote"), &link));
        s.pair_instances(w, d);
        return std::array<int, 3>{w, p, d};
    };

    SUBCASE("concurrent execution lets the independent program slip ahead") {
        sim::SimConfig cfg;
        sim::Simulation s(cfg);
        const auto [w, p, d] = build(s);
        s.run();
        CHECK(s.result(p).finish == 3000);
        CHECK(s.result(w).finish == 5000);
        CHECK(s.makespan() == 5000);
    }

    SUBCASE("the baseline holds the independent program behind the blocked one") {
        sim::SimConfig cfg;
        cfg.linear_baseline = true;
        sim::Simulation s(cfg);
        const auto [w, p, d] = build(s);
        s.run();
        CHECK(!s.deadlocked());
        // waiter: wake @2500, receive done @3500, return @4500
        CHECK(s.result(w).finish == 4500);
        // the independent program only starts after the waiter finished
        CHECK(s.result(p).finish == 7500);
        CHECK(s.result(p).results == std::vector<i32>{10});
        CHECK(s.makespan() == 7500);
    }
}

// ---------------------------------------------------------------------------------
// Dynamic control flow.

TEST_CASE("conditional branches re-enter a block until the exit condition holds") {
    const char* text = R"(
META_START
    name: loop3
META_END

^b0 {type = CL}:
    one = assign() : 1
    i = assign() : 0

^b1 {type = CL}:
    i = add(i, one)
    blt(i, 3, b1)

^b2 {type = CL}:
    return_result(i)
)";
    sim::SimConfig cfg;
    sim::Simulation s(cfg);
    const int n0 = s.add_node(classical_node("solo"));
    const int p0 = s.add_instance(n0, prep(text, classical_node("solo")));
    s.run();

    CHECK(!s.deadlocked());
    CHECK(s.result(p0).results == std::vector<i32>{3});
    // blocks execute one at a time: 2 + 3 * 2 + 1 instructions
    CHECK(s.result(p0).finish == 9000);
    // the loop body was materialized three times
    CHECK(s.node_graph(n0).size() == 5);
}

// ---------------------------------------------------------------------------------
// Quantum execution across nodes.

TEST_CASE("state teleport delivers the prepared state deterministically") {
    const char* sender = R"(
META_START
    name: tsend
    parameters: peer
    csockets: 0 -> bob
    epr_sockets: 0 -> bob
META_END

^b0 {type = QL}:
    run_routine() : prepare

^b1 {type = QC}:
    run_request() : share

^b2 {type = QL}:
    run_routine() : bell_measure

^b3 {type = CL}:
    two = assign() : 2
    packed = mul(m1, two)
    packed = add(packed, m2)
    send_cmsg(0, packed)
    return_result(m1, m2)

SUBROUTINE prepare
    params:
    returns:
    uses: 1
    keeps: 1
  NETQASM_START
    set Q1 1
    init Q1
    x Q1
  NETQASM_END

SUBROUTINE bell_measure
    params:
    returns: m1, m2
    uses: 0, 1
    keeps:
  NETQASM_START
    set Q0 0
    set Q1 1
    cnot Q1 Q0
    h Q1
    meas Q1 M0
    meas Q0 M1
    store M0 @output[0]
    store M1 @output[1]
  NETQASM_END

REQUEST share
    callback_type: none
    callback:
    returns:
    remote_id: {peer}
    epr_socket_id: 0
    num_pairs: 1
    virt_ids: all 0
    fidelity: 1.0
    typ: create_keep
    role: create
)";
    const char* receiver = R"(
META_START
    name: trecv
    parameters: peer
    csockets: 0 -> alice
    epr_sockets: 0 -> alice
META_END

^b0 {type = QC}:
    run_request() : share

^b1 {type = CC}:
    packed = recv_cmsg(0)

^b2 {type = CL}:
    two = assign() : 2
    m1 = div(packed, two)
    dbl = mul(m1, two)
    m2 = sub(packed, dbl)

^b3 {type = QL}:
    run_routine(m2, m1) : fix_measure

^b4 {type = CL}:
    return_result(outcome)

SUBROUTINE fix_measure
    params: do_x, do_z
    returns: outcome
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    load R0 @input[0]
    load R1 @input[1]
    bez R0 2
    x Q0
    bez R1 2
    z Q0
    meas Q0 M0
    store M0 @output[0]
  NETQASM_END

REQUEST share
    callback_type: none
    callback:
    returns:
    remote_id: {peer}
    epr_socket_id: 0
    num_pairs: 1
    virt_ids: all 0
    fidelity: 1.0
    typ: create_keep
    role: receive
)";
    for (u64 seed : {1ull, 7ull, 23ull}) {
        CAPTURE(seed);
        sim::SimConfig cfg;
        cfg.seed = seed;
        sim::Simulation s(cfg);
        const int na = s.add_node(noiseless("alice", 2));
        const int nb = s.add_node(noiseless("bob", 2));
        ehi::LinkInfo link;
        link.epr_duration = 1000;
        link.cc_latency = 500;
        s.set_link("alice", "bob", link);
        const int pa = s.add_instance(na, prep(sender, noiseless("alice", 2), &link, {{"peer", 1}}));
        const int pb =
            s.add_instance(nb, prep(receiver, noiseless("bob", 2), &link, {{"peer", 0}}));
        s.pair_instances(pa, pb);
        s.run();

        CHECK(!s.deadlocked());
        // the teleported |1> always measures 1 on the receiver, whatever the
        // correction bits were
        CHECK(s.result(pb).results == std::vector<i32>{1});
        REQUIRE(s.result(pa).results.size() == 2);
        for (i32 m : s.result(pa).results) CHECK((m == 0 || m == 1));
        CHECK(s.entdist().pairs_delivered() == 1);
        REQUIRE(s.entdist().starts().size() == 1);
        // both sides submit their half @14000 (prepare runs for 11000 ns first)
        CHECK(s.entdist().starts()[0].t == 14000);
        // sender timeline is independent of the measured bits
        CHECK(s.result(pa).finish == 242000);
    }
}

TEST_CASE("measured pair trains give identical keys on both ends") {
    const char* maker = R"(
META_START
    name: keymaker
    parameters: peer
    epr_sockets: 0 -> kb
META_END

^b0 {type = QC}:
    run_request() : qkd

^b1 {type = CL}:
    return_result(bits)

REQUEST qkd
    callback_type: none
    callback:
    returns: bits<>
    remote_id: {peer}
    epr_socket_id: 0
    num_pairs: 4
    virt_ids: all 0
    fidelity: 1.0
    typ: measure_directly
    role: create
)";
    const char* taker = R"(
META_START
    name: keytaker
    parameters: peer
    epr_sockets: 0 -> ka
META_END

^b0 {type = QC}:
    run_request() : qkd

^b1 {type = CL}:
    return_result(bits)

REQUEST qkd
    callback_type: none
    callback:
    returns: bits<>
    remote_id: {peer}
    epr_socket_id: 0
    num_pairs: 4
    virt_ids: all 0
    fidelity: 1.0
    typ: measure_directly
    role: receive
)";
    sim::SimConfig cfg;
    cfg.seed = 11;
    sim::Simulation s(cfg);
    const int na = s.add_node(noiseless("ka", 1));
    const int nb = s.add_node(noiseless("kb", 1));
    ehi::LinkInfo link;
    link.epr_duration = 1000;
    link.cc_latency = 500;
    s.set_link("ka", "kb", link);
    const int pa = s.add_instance(na, prep(maker, noiseless("ka", 1), &link, {{"peer", 1}}));
    const int pb = s.add_instance(nb, prep(taker, noiseless("kb", 1), &link, {{"peer", 0}}));
    s.pair_instances(pa, pb);
    s.run();

    CHECK(!s.deadlocked());
    const auto& ka = s.result(pa).results;
    const auto& kb = s.result(pb).results;
    REQUIRE(ka.size() == 4);
    CHECK(ka == kb);
    for (i32 bit : ka) CHECK((bit == 0 || bit == 1));
    // a perfect pair measured in the same basis gives equal bits; with four
    // pairs and a fixed seed the key is reproducible but not constant
    CHECK(s.entdist().pairs_delivered() == 4);
    // pairs regenerate back-to-back: prologue @1000, then one per round trip
    REQUIRE(s.entdist().starts().size() == 4);
    CHECK(s.entdist().starts()[0].t == 1000);
    CHECK(s.entdist().starts()[3].t == 4000);
    // delivery @5000, epilogue @6000, return @7000 on both ends
    CHECK(s.result(pa).finish == 7000);
    CHECK(s.result(pb).finish == 7000);
}

TEST_CASE("per-pair callbacks serialize generation through the shared slot") {
    const char* creator = R"(
META_START
    name: cseq
    parameters: peer
    epr_sockets: 0 -> beta
META_END

^b0 {type = QC}:
    run_request() : gen

^b1 {type = CL}:
    done = assign() : 1
    return_result(done)

SUBROUTINE eat
    params:
    returns:
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    meas Q0 M0
  NETQASM_END

REQUEST gen
    callback_type: sequential
    callback: eat
    returns:
    remote_id: {peer}
    epr_socket_id: 0
    num_pairs: 2
    virt_ids: all 0
    fidelity: 1.0
    typ: create_keep
    role: create
)";
    const char* acceptor = R"(
META_START
    name: cacc
    parameters: peer
    epr_sockets: 0 -> alpha
META_END

^b0 {type = QC}:
    run_request() : gen

^b1 {type = CL}:
    done = assign() : 1
    return_result(done)

SUBROUTINE eat
    params:
    returns:
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    meas Q0 M0
  NETQASM_END

REQUEST gen
    callback_type: sequential
    callback: eat
    returns:
    remote_id: {peer}
    epr_socket_id: 0
    num_pairs: 2
    virt_ids: all 0
    fidelity: 1.0
    typ: create_keep
    role: receive
)";
    sim::SimConfig cfg;
    sim::Simulation s(cfg);
    const int na = s.add_node(noiseless("alpha", 2));
    const int nb = s.add_node(noiseless("beta", 2));
    ehi::LinkInfo link;
    link.epr_duration = 1000;
    link.cc_latency = 500;
    s.set_link("alpha", "beta", link);
    const int pa = s.add_instance(na, prep(creator, noiseless("alpha", 2), &link, {{"peer", 1}}));
    const int pb = s.add_instance(nb, prep(acceptor, noiseless("beta", 2), &link, {{"peer", 0}}));
    s.pair_instances(pa, pb);
    s.run();

    CHECK(!s.deadlocked());
    CHECK(s.result(pa).results == std::vector<i32>{1});
    CHECK(s.result(pb).results == std::vector<i32>{1});
    CHECK(s.entdist().pairs_delivered() == 2);
    REQUIRE(s.entdist().starts().size() == 2);
    // both pairs land on the same virtual slot: the second generation cannot
    // start until the callback measured and freed the first (6000 ns, ending
    // @8000 after the @2000 delivery)
    CHECK(s.entdist().starts()[0].t == 1000);
    CHECK(s.entdist().starts()[1].t == 8000);
    // second delivery @9000, its callback ends @15000, epilogue and the final
    // block finish @18000
    CHECK(s.result(pa).finish == 18000);
    CHECK(s.result(pb).finish == 18000);
}

// ---------------------------------------------------------------------------------
// Background routines: submit and join.

TEST_CASE("submitted routines run before the join and publish their returns") {
    const char* text = R"(
META_START
    name: forked
META_END

^b0 {type = QL}:
    submit_routine() : ra
    submit_routine() : rb
    join_routines()

^b1 {type = CL}:
    s = add(ma, mb)
    return_result(s)

SUBROUTINE ra
    params:
    returns: ma
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    init Q0
    x Q0
    meas Q0 M0
    store M0 @output[0]
  NETQASM_END

SUBROUTINE rb
    params:
    returns: mb
    uses: 1
    keeps:
  NETQASM_START
    set Q0 1
    init Q0
    x Q0
    meas Q0 M0
    store M0 @output[0]
  NETQASM_END
)";
    sim::SimConfig cfg;
    sim::Simulation s(cfg);
    const int n0 = s.add_node(noiseless("solo", 2));
    const int p0 = s.add_instance(n0, prep(text, noiseless("solo", 2)));
    s.run();

    CHECK(!s.deadlocked());
    // both routines prepared and measured |1>
    CHECK(s.result(p0).results == std::vector<i32>{2});
    CHECK(s.result(p0).finished);
}
