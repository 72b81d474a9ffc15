#include <doctest.h>

#include <set>

#include "qnsim/ehi/ehi.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/task/graph.hpp"

using namespace qnsim;
using namespace qnsim::task;

namespace {

const char* kShapes = R"(
META_START
    name: shapes
    parameters:
    csockets: 0 -> peer
    epr_sockets: 0 -> peer
META_END

^cl0 {type = CL}:
    x = assign() : 1
    y = add(x, x)
    send_cmsg(0, y)

^cc0 {type = CC}:
    m = recv_cmsg(0)

^ql0 {type = QL}:
    run_routine() : ra

^ql1 {type = QL}:
    submit_routine() : ra
    submit_routine() : rb
    join_routines()

^qc0 {type = QC, deadlines = [ql0: 2000]}:
    run_request() : single

^qc1 {type = QC}:
    run_request() : multi_seq

^qc2 {type = QC}:
    run_request() : multi_wa

^cl1 {type = CL}:
    return_result(m)

SUBROUTINE ra
    params:
    returns: ma
    uses: 0
    keeps:
  NETQASM_START
    set Q0 0
    init Q0
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
    meas Q0 M0
    store M0 @output[0]
  NETQASM_END

SUBROUTINE cb
    params:
    returns:
    uses:
    keeps:
  NETQASM_START
    set R0 0
  NETQASM_END

REQUEST single
    callback_type: none
    callback:
    returns:
    remote_id: 1
    epr_socket_id: 0
    num_pairs: 1
    virt_ids: all 0
    fidelity: 1.0
    typ: create_keep
    role: create

REQUEST multi_seq
    callback_type: sequential
    callback: cb
    returns:
    remote_id: 1
    epr_socket_id: 0
    num_pairs: 3
    virt_ids: increment 0
    fidelity: 1.0
    typ: create_keep
    role: create

REQUEST multi_wa
    callback_type: wait_all
    callback: cb
    returns:
    remote_id: 1
    epr_socket_id: 0
    num_pairs: 2
    virt_ids: increment 0
    fidelity: 1.0
    typ: create_keep
    role: create
)";

struct Fixture {
    lang::Program prog;
    ehi::NodeInfo node = ehi::generic_preset(4);
    BuildContext ctx;

    Fixture() {
        prog = lang::parse_program(kShapes, "task_test");
        DiagList diags = lang::validate_program(prog);
        REQUIRE(diags.empty());
        ctx.node = &node;
        ctx.epr_duration_by_socket[0] = 7000;
    }

    std::map<std::string, std::vector<std::pair<std::string, time_ns>>> deadlines() const {
        lang::InstantiatedProgram ip =
            lang::instantiate(prog, {}, ehi::make_symbols(node, nullptr));
        return ip.deadlines_ns;
    }
};

// All ids of a given kind, in id order.
std::vector<int> ids_of_kind(const TaskGraph& g, TaskKind k) {
    std::vector<int> out;
    for (int v = 0; v < g.size(); ++v)
        if (g.task(v).kind == k) out.push_back(v);
    return out;
}

} // namespace

TEST_CASE("block shapes compile to the expected task chains") {
    Fixture f;
    TaskGraph g = build_full_graph(f.prog, f.deadlines(), /*pid=*/7, f.ctx);

    // cl0(HostLocal) cc0(HostEvent)
    // ql0: Pre LR Post
    // ql1: Pre LR Post  Pre LR Post  Join
    // qc0: Pre SP Post
    // qc1: Pre MP cb cb cb Post
    // qc2: Pre MP cb Post
    // cl1: HostLocal
    REQUIRE(g.size() == 2 + 3 + 7 + 3 + 6 + 4 + 1);

    CHECK(g.task(0).kind == TaskKind::HostLocal);
    CHECK(g.task(0).duration_est == 3 * f.node.host_latency);
    CHECK(g.task(0).pid == 7);
    CHECK(g.task(0).block == "cl0");
    CHECK(g.task(1).kind == TaskKind::HostEvent);
    CHECK(g.task(1).duration_est == 1 * f.node.host_latency);
    CHECK(g.has_edge(0, 1));

    // ql0: 2=Pre 3=LR 4=Post
    CHECK(g.task(2).kind == TaskKind::PreCall);
    CHECK(g.task(3).kind == TaskKind::LocalRoutine);
    CHECK(g.task(3).lr->name == "ra");
    // set + store at qnos latency, init + meas at gate speed
    CHECK(g.task(3).duration_est == 2 * f.node.qnos_latency + 2 * 5000);
    CHECK(g.task(4).kind == TaskKind::PostCall);
    CHECK(g.has_edge(1, 2));
    CHECK(g.has_edge(2, 3));
    CHECK(g.has_edge(3, 4));

    // ql1: 5=Pre 6=LR 7=Post 8=Pre 9=LR 10=Post 11=Join
    CHECK(g.task(5).kind == TaskKind::PreCall);
    CHECK(g.task(8).kind == TaskKind::PreCall);
    CHECK(g.task(11).kind == TaskKind::Join);
    CHECK(g.has_edge(4, 5));  // block chain enters at the first PreCall
    CHECK(g.has_edge(5, 8));  // submits issue in order without waiting
    CHECK_FALSE(g.has_edge(7, 8));
    CHECK(g.has_edge(7, 11)); // join collects both posts
    CHECK(g.has_edge(10, 11));
    CHECK(g.has_edge(8, 11));

    // qc0: 12=Pre 13=SinglePair 14=Post
    CHECK(g.task(13).kind == TaskKind::SinglePair);
    CHECK(g.task(13).rr->name == "single");
    CHECK(g.task(13).duration_est == 7000);
    CHECK(g.has_edge(11, 12));
    CHECK(g.has_edge(12, 13));
    CHECK(g.has_edge(13, 14));

    // qc1: 15=Pre 16=MultiPair 17..19=Callback 20=Post
    CHECK(g.task(16).kind == TaskKind::MultiPair);
    CHECK(g.task(16).duration_est == 3 * 7000);
    for (int c = 17; c <= 19; ++c) {
        CHECK(g.task(c).kind == TaskKind::Callback);
        CHECK(g.task(c).lr->name == "cb");
        CHECK(g.task(c).pair_index == c - 17);
        CHECK(g.task(c).duration_est == f.node.qnos_latency);
    }
    CHECK(g.has_edge(16, 17));
    CHECK(g.has_edge(17, 18));
    CHECK(g.has_edge(18, 19));
    CHECK(g.has_edge(19, 20));
    CHECK(g.task(20).kind == TaskKind::PostCall);

    // qc2: 21=Pre 22=MultiPair 23=Callback(all pairs) 24=Post
    CHECK(g.task(22).duration_est == 2 * 7000);
    CHECK(g.task(23).kind == TaskKind::Callback);
    CHECK(g.task(23).pair_index == -1);
    CHECK(g.has_edge(22, 23));
    CHECK(g.has_edge(23, 24));

    // cl1: 25
    CHECK(g.task(25).kind == TaskKind::HostLocal);
    CHECK(g.has_edge(24, 25));

    // deadline: qc0's exit must follow ql0's exit within 2000 ns
    REQUIRE(g.deadline_edges().size() == 1);
    CHECK(g.deadline_edges()[0].src == 4);
    CHECK(g.deadline_edges()[0].dst == 14);
    CHECK(g.deadline_edges()[0].delta == 2000);

    // processor assignment
    for (int v : ids_of_kind(g, TaskKind::LocalRoutine)) CHECK_FALSE(is_cps_task(g.task(v).kind));
    for (int v : ids_of_kind(g, TaskKind::PreCall)) CHECK(is_cps_task(g.task(v).kind));

    CHECK(g.task(3).label() == "p7:ql0#0:LocalRoutine(ra)");
    CHECK(g.task(13).label() == "p7:qc0#0:SinglePair(single)");
}

TEST_CASE("control flow with branches has no full graph") {
    const char* text = R"(
META_START
    name: loopy
    parameters:
    csockets:
    epr_sockets:
META_END

^b0 {type = CL}:
    x = assign() : 0

^b1 {type = CL}:
    x = add(x, x)
    blt(x, 10, b1)
)";
    lang::Program p = lang::parse_program(text, "task_test");
    REQUIRE(lang::validate_program(p).empty());
    CHECK_FALSE(is_predictable(p));
    ehi::NodeInfo node = ehi::generic_preset(2);
    BuildContext ctx;
    ctx.node = &node;
    CHECK_THROWS_AS(build_full_graph(p, {}, 0, ctx), SetupError);

    // block-at-a-time creation still works
    TaskGraph g;
    BlockTasks bt0 = create_tasks_for_block(g, p, p.blocks[1], 0, 0, ctx);
    BlockTasks bt1 = create_tasks_for_block(g, p, p.blocks[1], 0, 1, ctx);
    CHECK(g.task(bt0.entry).iteration == 0);
    CHECK(g.task(bt1.entry).iteration == 1);
    CHECK(g.task(bt1.entry).kind == TaskKind::HostLocal);
}

TEST_CASE("several instances share one graph and linearize to a chain") {
    Fixture f;
    TaskGraph g;
    BlockTasks a = append_full_graph(g, f.prog, f.deadlines(), 0, f.ctx);
    BlockTasks b = append_full_graph(g, f.prog, f.deadlines(), 1, f.ctx);

    CHECK(g.size() == 2 * 26);
    CHECK(g.tasks_of(0).size() == 26);
    CHECK(g.tasks_of(1).size() == 26);
    CHECK_FALSE(g.has_edge(a.exit, b.entry)); // instances start independent

    g.linearize();
    for (int v = 0; v + 1 < g.size(); ++v) CHECK(g.has_edge(v, v + 1));
    std::vector<int> order = g.topo_order();
    for (int v = 0; v < g.size(); ++v) CHECK(order[static_cast<size_t>(v)] == v);
}

TEST_CASE("cycles are rejected") {
    TaskGraph g;
    Task t;
    t.kind = TaskKind::HostLocal;
    int a = g.add_task(t);
    int b = g.add_task(t);
    g.add_edge(a, b);
    g.add_edge(b, a);
    CHECK_THROWS_AS(g.topo_order(), InternalError);
    CHECK_THROWS_AS(g.add_edge(a, a), InternalError);
}

TEST_CASE("split keeps cross-processor predecessors as external deps") {
    Fixture f;
    TaskGraph g = build_full_graph(f.prog, f.deadlines(), 0, f.ctx);
    PartialGraphs pg = split_graph(g);

    // LR(3) depends on Pre(2) across processors.
    REQUIRE(pg.ext_deps.count(3) == 1);
    CHECK(pg.ext_deps.at(3) == std::vector<int>{2});
    // Post(4) gets its closest classical ancestor Pre(2) as a direct edge.
    CHECK(pg.edge_in_partial(2, 4));
    // The quantum side is ordered through classical hops: ra(3) precedes both
    // submitted routines (6, 9) and the first pair task (13).
    CHECK(pg.edge_in_partial(3, 6));
    CHECK(pg.edge_in_partial(3, 9));
    CHECK(pg.edge_in_partial(13, 16));
    // Same-processor chains stay direct edges.
    CHECK(pg.edge_in_partial(16, 17));
    CHECK(pg.edge_in_partial(17, 18));
    // The two submitted routines are not mutually ordered.
    CHECK_FALSE(pg.edge_in_partial(6, 9));
    CHECK_FALSE(pg.edge_in_partial(9, 6));
}

TEST_CASE("split preserves the full precedence order on random graphs") {
    Rng rng(20260815);
    for (int rep = 0; rep < 300; ++rep) {
        const int n = static_cast<int>(rng.randint(2, 30));
        TaskGraph g;
        for (int v = 0; v < n; ++v) {
            Task t;
            t.kind = rng.uniform() < 0.5 ? TaskKind::HostLocal : TaskKind::LocalRoutine;
            t.pid = 0;
            t.block = "b";
            g.add_task(t);
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.2) g.add_edge(i, j);

        PartialGraphs pg = split_graph(g);

        // Oracle: transitive closure over the union of partial edges and
        // external dependencies must contain every original edge.
        std::vector<std::vector<bool>> reach(static_cast<size_t>(n),
                                             std::vector<bool>(static_cast<size_t>(n), false));
        auto add = [&](int a, int b) { reach[static_cast<size_t>(a)][static_cast<size_t>(b)] = true; };
        for (auto [a, b] : pg.cps_edges) add(a, b);
        for (auto [a, b] : pg.qps_edges) add(a, b);
        for (const auto& [v, deps] : pg.ext_deps)
            for (int d : deps) add(d, v);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                if (reach[static_cast<size_t>(i)][static_cast<size_t>(k)])
                    for (int j = 0; j < n; ++j)
                        if (reach[static_cast<size_t>(k)][static_cast<size_t>(j)])
                            reach[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;

        int violations = 0;
        for (int v = 0; v < n; ++v)
            for (int s : g.succ(v))
                if (!reach[static_cast<size_t>(v)][static_cast<size_t>(s)]) ++violations;
        CHECK(violations == 0);
        if (violations != 0) return; // one detailed failure is enough
    }
}

TEST_CASE("graph dumps are well formed") {
    Fixture f;
    TaskGraph g = build_full_graph(f.prog, f.deadlines(), 0, f.ctx);

    std::string dot = g.to_dot();
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("SinglePair") != std::string::npos);
    CHECK(dot.find("style=dashed") != std::string::npos); // deadline edge

    std::string jl = g.to_json_lines();
    CHECK(jl.find("\"kind\":\"MultiPair\"") != std::string::npos);
    CHECK(jl.find("\"processor\":\"QPS\"") != std::string::npos);
    // one line per task
    CHECK(std::count(jl.begin(), jl.end(), '\n') == g.size());
}
