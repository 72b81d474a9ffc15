#include "qnsim/task/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qnsim/nqasm/vm.hpp"

namespace qnsim::task {

const char* task_kind_name(TaskKind k) {
    switch (k) {
    case TaskKind::HostLocal: return "HostLocal";
    case TaskKind::HostEvent: return "HostEvent";
    case TaskKind::PreCall: return "PreCall";
    case TaskKind::LocalRoutine: return "LocalRoutine";
    case TaskKind::PostCall: return "PostCall";
    case TaskKind::Join: return "Join";
    case TaskKind::SinglePair: return "SinglePair";
    case TaskKind::MultiPair: return "MultiPair";
    case TaskKind::Callback: return "Callback";
    }
    return "?";
}

bool is_cps_task(TaskKind k) {
    switch (k) {
    case TaskKind::HostLocal:
    case TaskKind::HostEvent:
    case TaskKind::PreCall:
    case TaskKind::PostCall:
    case TaskKind::Join:
        return true;
    default:
        return false;
    }
}

std::string Task::label() const {
    std::ostringstream os;
    os << "p" << pid << ":" << block << "#" << iteration << ":" << task_kind_name(kind);
    if (kind == TaskKind::LocalRoutine || kind == TaskKind::Callback) {
        if (lr != nullptr) os << "(" << lr->name << ")";
        if (pair_index >= 0) os << "[" << pair_index << "]";
    } else if (kind == TaskKind::SinglePair || kind == TaskKind::MultiPair) {
        if (rr != nullptr) os << "(" << rr->name << ")";
    }
    return os.str();
}

int TaskGraph::add_task(Task t) {
    t.id = static_cast<int>(tasks_.size());
    tasks_.push_back(std::move(t));
    succ_.emplace_back();
    pred_.emplace_back();
    return tasks_.back().id;
}

void TaskGraph::add_edge(int from, int to) {
    if (from < 0 || to < 0 || from >= size() || to >= size() || from == to)
        throw InternalError("task graph: bad edge " + std::to_string(from) + "->" +
                            std::to_string(to));
    if (has_edge(from, to)) return;
    succ_[static_cast<size_t>(from)].push_back(to);
    pred_[static_cast<size_t>(to)].push_back(from);
}

void TaskGraph::add_deadline_edge(int src, int dst, time_ns delta) {
    if (src < 0 || dst < 0 || src >= size() || dst >= size())
        throw InternalError("task graph: bad deadline edge");
    deadline_edges_.push_back(DeadlineEdge{src, dst, delta});
}

bool TaskGraph::has_edge(int from, int to) const {
    const auto& s = succ_.at(static_cast<size_t>(from));
    return std::find(s.begin(), s.end(), to) != s.end();
}

std::vector<int> TaskGraph::topo_order() const {
    std::vector<int> indeg(static_cast<size_t>(size()), 0);
    for (int v = 0; v < size(); ++v)
        indeg[static_cast<size_t>(v)] = static_cast<int>(pred_[static_cast<size_t>(v)].size());
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < size(); ++v)
        if (indeg[static_cast<size_t>(v)] == 0) ready.push(v);
    std::vector<int> order;
    order.reserve(static_cast<size_t>(size()));
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int s : succ_[static_cast<size_t>(v)])
            if (--indeg[static_cast<size_t>(s)] == 0) ready.push(s);
    }
    if (static_cast<int>(order.size()) != size())
        throw InternalError("task graph contains a cycle");
    return order;
}

void TaskGraph::linearize() {
    for (int v = 0; v + 1 < size(); ++v) add_edge(v, v + 1);
    topo_order(); // throws if the chain contradicts existing edges
}

std::vector<int> TaskGraph::tasks_of(int pid) const {
    std::vector<int> out;
    for (int v = 0; v < size(); ++v)
        if (tasks_[static_cast<size_t>(v)].pid == pid) out.push_back(v);
    return out;
}

std::string TaskGraph::to_dot() const {
    std::ostringstream os;
    os << "digraph tasks {\n  rankdir=TB;\n";
    for (int v = 0; v < size(); ++v) {
        const Task& t = tasks_[static_cast<size_t>(v)];
        const char* shape = is_cps_task(t.kind) ? "box" : "ellipse";
        os << "  t" << v << " [label=\"" << t.label() << "\\n" << t.duration_est
           << " ns\", shape=" << shape << "];\n";
    }
    for (int v = 0; v < size(); ++v)
        for (int s : succ_[static_cast<size_t>(v)]) os << "  t" << v << " -> t" << s << ";\n";
    for (const DeadlineEdge& e : deadline_edges_)
        os << "  t" << e.src << " -> t" << e.dst << " [style=dashed, label=\"" << e.delta
           << " ns\"];\n";
    os << "}\n";
    return os.str();
}

std::string TaskGraph::to_json_lines() const {
    std::ostringstream os;
    for (int v = 0; v < size(); ++v) {
        const Task& t = tasks_[static_cast<size_t>(v)];
        nlohmann::json j;
        j["id"] = t.id;
        j["kind"] = task_kind_name(t.kind);
        j["processor"] = is_cps_task(t.kind) ? "CPS" : "QPS";
        j["pid"] = t.pid;
        j["block"] = t.block;
        j["iteration"] = t.iteration;
        j["duration_est"] = t.duration_est;
        j["successors"] = succ_[static_cast<size_t>(v)];
        os << j.dump() << "\n";
    }
    return os.str();
}

bool PartialGraphs::edge_in_partial(int from, int to) const {
    auto hit = [&](const std::vector<std::pair<int, int>>& es) {
        return std::find(es.begin(), es.end(), std::make_pair(from, to)) != es.end();
    };
    if (hit(cps_edges) || hit(qps_edges)) return true;
    auto it = ext_deps.find(to);
    if (it == ext_deps.end()) return false;
    return std::find(it->second.begin(), it->second.end(), from) != it->second.end();
}

PartialGraphs split_graph(const TaskGraph& g) {
    PartialGraphs out;
    auto proc_edges = [&out](bool cps) -> std::vector<std::pair<int, int>>& {
        return cps ? out.cps_edges : out.qps_edges;
    };
    for (int v = 0; v < g.size(); ++v) {
        const bool v_cps = is_cps_task(g.task(v).kind);
        std::set<int> closest;
        std::vector<int> stack;
        std::set<int> seen;
        for (int p : g.pred(v)) {
            if (is_cps_task(g.task(p).kind) == v_cps) {
                auto& es = proc_edges(v_cps);
                auto e = std::make_pair(p, v);
                if (std::find(es.begin(), es.end(), e) == es.end()) es.push_back(e);
            } else {
                out.ext_deps[v].push_back(p);
                stack.push_back(p);
                seen.insert(p);
            }
        }
        // Walk backwards through other-processor tasks; the first
        // same-processor task on each path is a closest ancestor.
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int p : g.pred(x)) {
                if (is_cps_task(g.task(p).kind) == v_cps) {
                    closest.insert(p);
                } else if (seen.insert(p).second) {
                    stack.push_back(p);
                }
            }
        }
        for (int a : closest) {
            auto& es = proc_edges(v_cps);
            auto e = std::make_pair(a, v);
            if (std::find(es.begin(), es.end(), e) == es.end()) es.push_back(e);
        }
    }
    return out;
}

// --- building -----------------------------------------------------------------

namespace {

time_ns epr_duration_for(const BuildContext& ctx, const lang::RequestRoutine& rr) {
    auto it = ctx.epr_duration_by_socket.find(rr.epr_socket);
    if (it == ctx.epr_duration_by_socket.end())
        throw SetupError("request '" + rr.name + "': EPR socket " +
                         std::to_string(rr.epr_socket) + " has no configured pair duration");
    return it->second;
}

struct BlockBuilder {
    TaskGraph& g;
    const lang::Program& prog;
    const lang::Block& blk;
    int pid;
    int iteration;
    const BuildContext& ctx;

    BlockTasks out;
    int prev_cps = -1;
    std::vector<int> pending_posts;

    int add(TaskKind kind, time_ns dur, int instr_index = -1) {
        Task t;
        t.kind = kind;
        t.pid = pid;
        t.block = blk.name;
        t.iteration = iteration;
        t.instr_index = instr_index;
        t.duration_est = dur;
        int id = g.add_task(std::move(t));
        out.all.push_back(id);
        if (out.entry < 0) out.entry = id;
        return id;
    }

    void chain_cps(int id) {
        if (prev_cps >= 0) g.add_edge(prev_cps, id);
    }

    // PreCall -> quantum chain -> PostCall for one call instruction; returns
    // the PostCall id. `async` leaves prev_cps at the PreCall.
    int call_chain(const lang::HostInstr& in, int idx, bool async) {
        const time_ns hl = ctx.node->host_latency;
        int pre = add(TaskKind::PreCall, hl, idx);
        chain_cps(pre);
        int tail = -1;
        if (lang::is_routine_call(in.op)) {
            const lang::LocalRoutine* lr = prog.find_routine(in.routine);
            if (lr == nullptr) throw SetupError("unknown routine '" + in.routine + "'");
            int t = add(TaskKind::LocalRoutine, nqasm::estimate_duration(*lr, *ctx.node), idx);
            g.task(t).lr = lr;
            g.add_edge(pre, t);
            tail = t;
        } else {
            const lang::RequestRoutine* rr = prog.find_request(in.routine);
            if (rr == nullptr) throw SetupError("unknown request '" + in.routine + "'");
            const time_ns per_pair = epr_duration_for(ctx, *rr);
            const int n_pairs = rr->concrete_pairs();
            int t = add(n_pairs > 1 ? TaskKind::MultiPair : TaskKind::SinglePair,
                        per_pair * n_pairs, idx);
            g.task(t).rr = rr;
            g.add_edge(pre, t);
            tail = t;
            if (rr->callback_type != lang::CallbackType::None) {
                const lang::LocalRoutine* cb = prog.find_routine(rr->callback);
                if (cb == nullptr) throw SetupError("unknown callback '" + rr->callback + "'");
                const time_ns cb_dur = nqasm::estimate_duration(*cb, *ctx.node);
                if (rr->callback_type == lang::CallbackType::Sequential) {
                    for (int i = 0; i < n_pairs; ++i) {
                        int c = add(TaskKind::Callback, cb_dur, idx);
                        g.task(c).lr = cb;
                        g.task(c).rr = rr;
                        g.task(c).pair_index = i;
                        g.add_edge(tail, c);
                        tail = c;
                    }
                } else { // WaitAll: one callback over all pairs
                    int c = add(TaskKind::Callback, cb_dur, idx);
                    g.task(c).lr = cb;
                    g.task(c).rr = rr;
                    g.add_edge(tail, c);
                    tail = c;
                }
            }
        }
        int post = add(TaskKind::PostCall, hl, idx);
        g.add_edge(tail, post);
        if (async) {
            pending_posts.push_back(post);
            prev_cps = pre;
        } else {
            prev_cps = post;
        }
        return post;
    }

    void join(int idx) {
        int j = add(TaskKind::Join, ctx.node->host_latency, idx);
        chain_cps(j);
        for (int p : pending_posts) g.add_edge(p, j);
        pending_posts.clear();
        prev_cps = j;
    }

    BlockTasks build() {
        using lang::BlockType;
        using lang::HostOp;
        const time_ns hl = ctx.node->host_latency;
        if (blk.type == BlockType::CL || blk.type == BlockType::CC) {
            TaskKind k = blk.type == BlockType::CL ? TaskKind::HostLocal : TaskKind::HostEvent;
            int t = add(k, static_cast<time_ns>(blk.instrs.size()) * hl);
            out.exit = t;
            return out;
        }
        for (size_t i = 0; i < blk.instrs.size(); ++i) {
            const lang::HostInstr& in = blk.instrs[i];
            const int idx = static_cast<int>(i);
            switch (in.op) {
            case HostOp::RunRoutine:
            case HostOp::RunRequest:
                call_chain(in, idx, /*async=*/false);
                break;
            case HostOp::SubmitRoutine:
            case HostOp::SubmitRequest:
                call_chain(in, idx, /*async=*/true);
                break;
            case HostOp::JoinRoutines:
                join(idx);
                break;
            default:
                throw SetupError("block '" + blk.name +
                                 "': instruction not allowed in a routine block");
            }
        }
        if (!pending_posts.empty()) join(-1); // implicit sync at block end
        if (out.entry < 0) {                  // degenerate empty block
            int t = add(TaskKind::Join, hl);
            prev_cps = t;
        }
        out.exit = prev_cps;
        return out;
    }
};

} // namespace

BlockTasks create_tasks_for_block(TaskGraph& g, const lang::Program& prog,
                                  const lang::Block& blk, int pid, int iteration,
                                  const BuildContext& ctx) {
    if (ctx.node == nullptr) throw InternalError("BuildContext without node info");
    BlockBuilder b{g, prog, blk, pid, iteration, ctx, {}, -1, {}};
    return b.build();
}

bool is_predictable(const lang::Program& prog) {
    for (const lang::Block& b : prog.blocks)
        for (const lang::HostInstr& in : b.instrs)
            if (lang::is_branch(in.op)) return false;
    return true;
}

BlockTasks append_full_graph(TaskGraph& g, const lang::Program& prog,
                             const std::map<std::string,
                                            std::vector<std::pair<std::string, time_ns>>>&
                                 deadlines_ns,
                             int pid, const BuildContext& ctx) {
    if (!is_predictable(prog))
        throw SetupError("program '" + prog.meta.name +
                         "': control flow is data dependent; full task graph unavailable");
    BlockTasks whole;
    std::map<std::string, BlockTasks> per_block;
    int prev_exit = -1;
    for (const lang::Block& blk : prog.blocks) {
        BlockTasks bt = create_tasks_for_block(g, prog, blk, pid, 0, ctx);
        if (prev_exit >= 0) g.add_edge(prev_exit, bt.entry);
        if (whole.entry < 0) whole.entry = bt.entry;
        whole.all.insert(whole.all.end(), bt.all.begin(), bt.all.end());
        prev_exit = bt.exit;
        per_block[blk.name] = bt;
    }
    whole.exit = prev_exit;
    for (const auto& [dst_block, refs] : deadlines_ns) {
        auto dst_it = per_block.find(dst_block);
        if (dst_it == per_block.end())
            throw SetupError("deadline on unknown block '" + dst_block + "'");
        for (const auto& [src_block, delta] : refs) {
            auto src_it = per_block.find(src_block);
            if (src_it == per_block.end())
                throw SetupError("deadline source block '" + src_block + "' not found");
            g.add_deadline_edge(src_it->second.exit, dst_it->second.exit, delta);
        }
    }
    return whole;
}

TaskGraph build_full_graph(const lang::Program& prog,
                           const std::map<std::string, std::vector<std::pair<std::string, time_ns>>>&
                               deadlines_ns,
                           int pid, const BuildContext& ctx) {
    TaskGraph g;
    append_full_graph(g, prog, deadlines_ns, pid, ctx);
    return g;
}

} // namespace qnsim::task
