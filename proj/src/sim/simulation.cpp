#include "qnsim/sim/simulation.hpp"

#include <algorithm>
#include <sstream>

namespace qnsim::sim {

namespace {

std::string in_handle_of(int tid) { return "t" + std::to_string(tid) + "_in"; }
std::string out_handle_of(int tid) { return "t" + std::to_string(tid) + "_out"; }

bool is_pair_kind(task::TaskKind k) {
    return k == task::TaskKind::SinglePair || k == task::TaskKind::MultiPair;
}

} // namespace

// --- internal state ---------------------------------------------------------

struct Simulation::TaskRun {
    enum class St { Pending, Ready, Running, Waiting, Done };
    St st = St::Pending;
    int preds_left = 0;
    size_t pc = 0; // next host instruction (HostLocal / HostEvent)
    std::string in_handle, out_handle;
    bool nested = false;        // per-pair callback: runs inside its pair task
    bool is_block_exit = false; // block-by-block mode: records block completion
    std::vector<int> cb_tids;   // pair tasks: callback tasks in pair order
    time_ns nested_free = 0;    // pair tasks: end of the last nested callback
};

struct Simulation::InstCtx final : host::HostContext {
    Simulation* sim = nullptr;
    int node = -1;
    int pid = -1;

    void send_message(int socket, const std::vector<i32>& payload) override {
        sim->cnet_->send(net::Endpoint{node, pid, socket}, payload);
    }
    std::optional<i32> try_recv(int socket) override {
        return sim->cnet_->try_recv(net::Endpoint{node, pid, socket});
    }
};

struct Simulation::Instance {
    int pid = -1;
    int node = -1;
    lang::InstantiatedProgram ip;
    host::HostState host;
    mem::SharedMemory shm;
    InstCtx ctx;
    std::map<int, time_ns> epr_by_socket; // pair socket -> link pair duration

    bool full_graph = false;
    int cur_block = 0;
    std::optional<int> branch_to;
    std::vector<int> iter_count; // executions per block, for task labels
    int open_tasks = 0;
    std::map<std::string, time_ns> block_exit_finish;

    InstanceResult res;
};

struct Simulation::Node {
    int id = -1;
    ehi::NodeInfo info;
    mem::QuantumMemory qmem;
    std::vector<int> phys_to_backend;
    std::unique_ptr<nqasm::NqVm> vm;

    task::TaskGraph graph; // all instances of this node share one graph
    std::vector<TaskRun> runs;
    std::vector<time_ns> abs_deadline;
    std::vector<time_ns> eff;
    bool eff_dirty = true;
    sched::ReadySet cps_ready, qps_ready;
    int cps_running = -1, qps_running = -1;
    std::map<std::pair<int, int>, int> waiting_msg; // (pid, socket) -> task

    Node(int id_, const ehi::NodeInfo& info_)
        : id(id_), info(info_),
          qmem(info_.qubits, ehi::derive_unit_module(info_, info_.num_comm(), info_.num_mem())) {
        info.id = id_;
    }
};

// --- construction and assembly ------------------------------------------------

Simulation::Simulation(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cnet_ = std::make_unique<net::ClassicalNetwork>(eq_);
    cnet_->set_on_arrival([this](const net::Endpoint& ep) { on_message(ep); });
    entdist_ = std::make_unique<net::EntDist>(eq_, backend_, rng_);
    entdist_->set_schedule(cfg_.schedule);
    entdist_->set_timeout(cfg_.timeout_mult, cfg_.timeout_policy);
}

Simulation::~Simulation() = default;

Simulation::Node& Simulation::node_at(int id) {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw SetupError("unknown node id " + std::to_string(id));
    return *nodes_[static_cast<size_t>(id)];
}

Simulation::Instance& Simulation::inst_at(int pid) {
    if (pid < 0 || pid >= static_cast<int>(instances_.size()))
        throw SetupError("unknown instance id " + std::to_string(pid));
    return *instances_[static_cast<size_t>(pid)];
}

const lang::Program& Simulation::prog_of(const Instance& inst) const { return inst.ip.prog; }

int Simulation::add_node(const ehi::NodeInfo& info) {
    if (started_) throw SetupError("cannot add nodes after the run started");
    if (info.name.empty()) throw SetupError("node needs a name");
    for (const auto& n : nodes_)
        if (n->info.name == info.name) throw SetupError("duplicate node name: " + info.name);
    const int id = static_cast<int>(nodes_.size());
    auto node = std::make_unique<Node>(id, info);
    for (const auto& q : node->info.qubits)
        node->phys_to_backend.push_back(backend_.add_qubit(q.t1, q.t2));
    node->vm =
        std::make_unique<nqasm::NqVm>(backend_, node->qmem, node->info, node->phys_to_backend);
    entdist_->register_node(id, &node->qmem, node->phys_to_backend);
    nodes_.push_back(std::move(node));
    return id;
}

int Simulation::node_id(const std::string& name) const {
    for (const auto& n : nodes_)
        if (n->info.name == name) return n->id;
    throw SetupError("unknown node name '" + name + "'");
}

void Simulation::set_schedule(net::NetworkSchedule schedule) {
    if (started_) throw SetupError("cannot change the schedule after the run started");
    cfg_.schedule = schedule;
    entdist_->set_schedule(std::move(schedule));
}

void Simulation::set_link(const std::string& node_a, const std::string& node_b,
                          const ehi::LinkInfo& link) {
    if (started_) throw SetupError("cannot add links after the run started");
    const int ida = node_id(node_a);
    const int idb = node_id(node_b);
    netinfo_.set_link(node_a, node_b, link);
    entdist_->set_link(ida, idb, link);
}

int Simulation::add_instance(int node_id, lang::InstantiatedProgram ip) {
    if (started_) throw SetupError("cannot add instances after the run started");
    Node& n = node_at(node_id);
    (void)n;
    if (ip.prog.blocks.empty())
        throw SetupError("program '" + ip.prog.meta.name + "' has no blocks");
    const int pid = static_cast<int>(instances_.size());
    auto inst = std::make_unique<Instance>();
    inst->pid = pid;
    inst->node = node_id;
    inst->ip = std::move(ip);
    inst->ctx.sim = this;
    inst->ctx.node = node_id;
    inst->ctx.pid = pid;
    inst->iter_count.assign(inst->ip.prog.blocks.size(), 0);
    // program parameters are plain host variables from the first instruction on
    for (const auto& [name, value] : inst->ip.inputs)
        inst->host.set(name, static_cast<i32>(value));
    inst->res.pid = pid;
    inst->res.node = node_id;
    instances_.push_back(std::move(inst));
    ++unfinished_;
    return pid;
}

void Simulation::pair_instances(int pid_a, int pid_b) {
    if (started_) throw SetupError("cannot pair instances after the run started");
    if (pid_a == pid_b) throw SetupError("cannot pair an instance with itself");
    Instance& a = inst_at(pid_a);
    Instance& b = inst_at(pid_b);
    if (a.node == b.node) throw SetupError("paired instances must live on different nodes");
    Node& na = node_at(a.node);
    Node& nb = node_at(b.node);
    const ehi::LinkInfo* link = netinfo_.find_link(na.info.name, nb.info.name);

    auto sockets_naming = [](const std::map<int, std::string>& sockets, const std::string& peer) {
        std::vector<int> out;
        for (const auto& [sock, name] : sockets)
            if (name == peer) out.push_back(sock);
        return out;
    };

    const auto ca = sockets_naming(a.ip.prog.meta.csockets, nb.info.name);
    const auto cb = sockets_naming(b.ip.prog.meta.csockets, na.info.name);
    if (ca.size() != cb.size())
        throw SetupError("programs '" + a.ip.prog.meta.name + "' and '" + b.ip.prog.meta.name +
                         "' declare mismatched message sockets for each other");
    if (ca.size() > 1)
        throw SetupError("program '" + a.ip.prog.meta.name +
                         "' has several message sockets naming node '" + nb.info.name +
                         "'; pairing is ambiguous");
    if (!ca.empty()) {
        if (link == nullptr)
            throw SetupError("no link between '" + na.info.name + "' and '" + nb.info.name + "'");
        cnet_->add_route(net::Endpoint{a.node, pid_a, ca[0]}, net::Endpoint{b.node, pid_b, cb[0]},
                         link->cc_latency);
    }

    const auto ea = sockets_naming(a.ip.prog.meta.epr_sockets, nb.info.name);
    const auto eb = sockets_naming(b.ip.prog.meta.epr_sockets, na.info.name);
    if (ea.size() != eb.size())
        throw SetupError("programs '" + a.ip.prog.meta.name + "' and '" + b.ip.prog.meta.name +
                         "' declare mismatched pair sockets for each other");
    if (ea.size() > 1)
        throw SetupError("program '" + a.ip.prog.meta.name +
                         "' has several pair sockets naming node '" + nb.info.name +
                         "'; pairing is ambiguous");
    if (!ea.empty()) {
        if (link == nullptr)
            throw SetupError("no link between '" + na.info.name + "' and '" + nb.info.name + "'");
        // requests on the wired socket must target the peer that socket reaches
        auto check_remote = [](const Instance& self, int sock, int peer_node,
                               const std::string& peer_name) {
            for (const auto& rr : self.ip.prog.requests) {
                if (rr.epr_socket != sock) continue;
                if (rr.remote_id.kind == lang::Operand::Kind::Int && rr.remote_id.ival != peer_node)
                    throw SetupError("request '" + rr.name + "' of '" + self.ip.prog.meta.name +
                                     "' names node id " + std::to_string(rr.remote_id.ival) +
                                     " but its pair socket is wired to node " +
                                     std::to_string(peer_node) + " ('" + peer_name + "')");
            }
        };
        check_remote(a, ea[0], b.node, nb.info.name);
        check_remote(b, eb[0], a.node, na.info.name);
        entdist_->register_session(a.node, pid_a, ea[0], b.node, pid_b, eb[0]);
        a.epr_by_socket[ea[0]] = link->epr_duration;
        b.epr_by_socket[eb[0]] = link->epr_duration;
    }

    if (ca.empty() && ea.empty())
        throw SetupError("programs '" + a.ip.prog.meta.name + "' and '" + b.ip.prog.meta.name +
                         "' share no sockets; nothing to pair");
}

// --- task creation -------------------------------------------------------------

void Simulation::build_initial_tasks(Instance& inst) {
    const lang::Program& prog = prog_of(inst);
    for (const auto& rr : prog.requests)
        if (!inst.epr_by_socket.count(rr.epr_socket))
            throw SetupError("instance " + std::to_string(inst.pid) + " of '" + prog.meta.name +
                             "' uses pair socket " + std::to_string(rr.epr_socket) +
                             " but was never paired on it");
    if (task::is_predictable(prog)) {
        Node& n = node_at(inst.node);
        task::BuildContext ctx{&n.info, inst.epr_by_socket};
        task::BlockTasks bt =
            task::append_full_graph(n.graph, prog, inst.ip.deadlines_ns, inst.pid, ctx);
        inst.full_graph = true;
        inst.open_tasks = static_cast<int>(bt.all.size());
        for (auto& c : inst.iter_count) c = 1;
        sync_runs(n);
    } else {
        create_block_tasks(inst, 0);
    }
}

void Simulation::create_block_tasks(Instance& inst, int block_index) {
    Node& n = node_at(inst.node);
    const lang::Program& prog = prog_of(inst);
    const lang::Block& blk = prog.blocks.at(static_cast<size_t>(block_index));
    const int iteration = inst.iter_count[static_cast<size_t>(block_index)]++;
    task::BuildContext ctx{&n.info, inst.epr_by_socket};
    task::BlockTasks bt = task::create_tasks_for_block(n.graph, prog, blk, inst.pid, iteration, ctx);
    inst.cur_block = block_index;
    inst.open_tasks = static_cast<int>(bt.all.size());
    sync_runs(n);
    n.runs[static_cast<size_t>(bt.exit)].is_block_exit = true;
    // materialize deadline annotations against blocks that already completed
    auto dit = inst.ip.deadlines_ns.find(blk.name);
    if (dit != inst.ip.deadlines_ns.end()) {
        for (const auto& [ref, delta] : dit->second) {
            auto fit = inst.block_exit_finish.find(ref);
            if (fit == inst.block_exit_finish.end()) continue; // reference has not run
            const time_ns abs = fit->second + delta;
            if (abs < n.abs_deadline[static_cast<size_t>(bt.exit)]) {
                n.abs_deadline[static_cast<size_t>(bt.exit)] = abs;
                n.eff_dirty = true;
            }
        }
    }
    activate_new_tasks(n, inst, bt.all);
}

void Simulation::sync_runs(Node& n) {
    const int old_size = static_cast<int>(n.runs.size());
    const int size = n.graph.size();
    if (size == old_size) return;
    n.runs.resize(static_cast<size_t>(size));
    n.abs_deadline.resize(static_cast<size_t>(size), sched::kNoDeadline);
    for (int tid = old_size; tid < size; ++tid) {
        TaskRun& r = n.runs[static_cast<size_t>(tid)];
        r.preds_left = static_cast<int>(n.graph.pred(tid).size());
        const task::Task& t = n.graph.task(tid);
        r.nested = t.kind == task::TaskKind::Callback && t.pair_index >= 0;
    }
    n.eff_dirty = true;
}

void Simulation::activate_new_tasks(Node& n, Instance& inst, const std::vector<int>& ids) {
    (void)inst;
    for (int tid : ids) {
        const TaskRun& r = n.runs[static_cast<size_t>(tid)];
        if (r.preds_left == 0 && r.st == TaskRun::St::Pending && !r.nested) make_ready(n, tid);
    }
}

void Simulation::make_ready(Node& n, int tid) {
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    r.st = TaskRun::St::Ready;
    (task::is_cps_task(n.graph.task(tid).kind) ? n.cps_ready : n.qps_ready).insert(tid);
    // A relative deadline becomes absolute the moment its reference task could first
    // run.  Anchoring at the reference's *finish* instead would leave the whole chain
    // without a deadline while the reference sits in a long queue -- exactly the
    // situation the deadline exists to cut short.  Ready-time anchoring is the
    // conservative choice: it can only tighten the deadline, never loosen it.
    for (const auto& e : n.graph.deadline_edges()) {
        if (e.src != tid) continue;
        const time_ns abs = eq_.now() + e.delta;
        if (abs < n.abs_deadline[static_cast<size_t>(e.dst)]) {
            n.abs_deadline[static_cast<size_t>(e.dst)] = abs;
            n.eff_dirty = true;
        }
    }
}

// --- execution -------------------------------------------------------------------

void Simulation::run() {
    if (started_) throw SetupError("run() called twice");
    started_ = true;
    if (cfg_.linear_baseline)
        for (const auto& inst : instances_)
            if (!task::is_predictable(inst->ip.prog))
                throw SetupError("the serial baseline needs branch-free programs ('" +
                                 inst->ip.prog.meta.name + "' branches)");
    for (const auto& inst : instances_) build_initial_tasks(*inst);
    for (const auto& np : nodes_) {
        Node& n = *np;
        if (cfg_.linear_baseline) {
            n.graph.linearize();
            for (auto& r : n.runs) r.preds_left = 0; // recomputed below
            for (int tid = 0; tid < n.graph.size(); ++tid)
                n.runs[static_cast<size_t>(tid)].preds_left =
                    static_cast<int>(n.graph.pred(tid).size());
            n.eff_dirty = true;
        }
        for (int tid = 0; tid < n.graph.size(); ++tid) {
            const TaskRun& r = n.runs[static_cast<size_t>(tid)];
            if (r.preds_left == 0 && r.st == TaskRun::St::Pending && !r.nested) make_ready(n, tid);
        }
    }
    for (const auto& np : nodes_) kick(*np);
    while (unfinished_ > 0 && !eq_.empty()) {
        if (eq_.executed() > cfg_.max_events)
            throw ExecError("event budget exceeded after " + std::to_string(cfg_.max_events) +
                            " events; the run makes no progress");
        eq_.step();
    }
    deadlocked_ = unfinished_ > 0;
}

void Simulation::kick(Node& n) {
    try_dispatch_cps(n);
    try_dispatch_qps(n);
}

const std::vector<time_ns>& Simulation::eff_deadlines(Node& n) {
    if (n.eff_dirty) {
        n.eff = sched::effective_deadlines(n.graph, n.abs_deadline);
        n.eff_dirty = false;
    }
    return n.eff;
}

void Simulation::try_dispatch_cps(Node& n) {
    static const std::vector<time_ns> no_eff;
    while (n.cps_running < 0 && !n.cps_ready.empty()) {
        const auto& eff = cfg_.policy == sched::Policy::Edf ? eff_deadlines(n) : no_eff;
        const int tid = n.cps_ready.ordered(cfg_.policy, eff).front();
        n.cps_ready.erase(tid);
        TaskRun& r = n.runs[static_cast<size_t>(tid)];
        r.st = TaskRun::St::Running;
        n.cps_running = tid;
        note(n, 'C', tid, "dispatch");
        switch (n.graph.task(tid).kind) {
        case task::TaskKind::HostLocal:
        case task::TaskKind::HostEvent:
            step_host(n, tid);
            break;
        case task::TaskKind::PreCall:
        case task::TaskKind::PostCall:
        case task::TaskKind::Join:
            eq_.in(n.info.host_latency, Signal::Effect, [this, &n, tid] { run_call_step(n, tid); });
            break;
        default:
            throw InternalError("quantum task in the classical ready set");
        }
    }
}

void Simulation::step_host(Node& n, int tid) {
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    const task::Task& t = n.graph.task(tid);
    Instance& inst = inst_at(t.pid);
    const lang::Block* blk = prog_of(inst).find_block(t.block);
    if (blk == nullptr) throw InternalError("task references a missing block");
    if (r.pc >= blk->instrs.size()) {
        finish_task(n, tid);
        return;
    }
    const lang::HostInstr& ins = blk->instrs[r.pc];
    if (ins.op == lang::HostOp::RecvCMsg) {
        const i32 sock = inst.host.eval_int(ins.args.at(0), "socket id");
        if (cnet_->inbox_size(net::Endpoint{inst.node, inst.pid, sock}) == 0) {
            // waiting costs no processor time; the task parks off the ready set
            r.st = TaskRun::St::Waiting;
            n.cps_running = -1;
            auto key = std::make_pair(inst.pid, static_cast<int>(sock));
            if (n.waiting_msg.count(key))
                throw InternalError("two tasks wait on one socket of one instance");
            n.waiting_msg[key] = tid;
            note(n, 'C', tid, "wait socket " + std::to_string(sock));
            return;
        }
    }
    eq_.in(n.info.host_latency, Signal::Effect, [this, &n, tid] { host_instr_done(n, tid); });
}

void Simulation::host_instr_done(Node& n, int tid) {
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    const task::Task& t = n.graph.task(tid);
    Instance& inst = inst_at(t.pid);
    const lang::Block& blk = *prog_of(inst).find_block(t.block);
    const host::InstrOutcome out = host::exec_instr(inst.host, blk, r.pc, inst.ctx);
    bool block_done = false;
    switch (out.kind) {
    case host::InstrOutcome::Kind::Advance:
        ++r.pc;
        block_done = r.pc >= blk.instrs.size();
        break;
    case host::InstrOutcome::Kind::Jump: {
        const int bi = prog_of(inst).block_index(out.target);
        if (bi < 0) throw ExecError("jump to unknown block '" + out.target + "'");
        if (inst.full_graph) throw InternalError("branch executed in a pre-built flow");
        inst.branch_to = bi;
        block_done = true;
        break;
    }
    case host::InstrOutcome::Kind::Return:
        block_done = true;
        break;
    case host::InstrOutcome::Kind::Blocked:
        throw InternalError("receive blocked after its inbox was checked");
    }
    if (block_done) {
        finish_task(n, tid);
        return;
    }
    // instruction boundary: an earlier-deadline arrival takes the processor
    if (cfg_.policy == sched::Policy::Edf && !n.cps_ready.empty()) {
        const auto& eff = eff_deadlines(n);
        const int cand = n.cps_ready.ordered(cfg_.policy, eff).front();
        if (eff.at(static_cast<size_t>(cand)) < eff.at(static_cast<size_t>(tid))) {
            r.st = TaskRun::St::Ready;
            n.cps_running = -1;
            n.cps_ready.insert(tid); // re-enters at the back
            ++preemptions_;
            note(n, 'C', tid, "preempt");
            try_dispatch_cps(n);
            return;
        }
    }
    step_host(n, tid);
}

void Simulation::run_call_step(Node& n, int tid) {
    switch (n.graph.task(tid).kind) {
    case task::TaskKind::PreCall:
        do_pre_call(n, tid);
        break;
    case task::TaskKind::PostCall:
        do_post_call(n, tid);
        break;
    case task::TaskKind::Join:
        break; // pure synchronization
    default:
        throw InternalError("unexpected call-step task kind");
    }
    finish_task(n, tid);
}

void Simulation::do_pre_call(Node& n, int tid) {
    const task::Task& pre = n.graph.task(tid);
    Instance& inst = inst_at(pre.pid);
    int qt = -1;
    for (int s : n.graph.succ(tid)) {
        const task::TaskKind k = n.graph.task(s).kind;
        if (k == task::TaskKind::LocalRoutine || is_pair_kind(k)) {
            qt = s;
            break;
        }
    }
    if (qt < 0) throw InternalError("call prologue feeds no quantum task");
    const task::Task& q = n.graph.task(qt);
    TaskRun& qr = n.runs[static_cast<size_t>(qt)];

    if (q.kind == task::TaskKind::LocalRoutine) {
        const lang::LocalRoutine& lr = *q.lr;
        const lang::Block& blk = *prog_of(inst).find_block(pre.block);
        const lang::HostInstr& ins = blk.instrs.at(static_cast<size_t>(pre.instr_index));
        if (ins.args.size() != lr.params.size())
            throw ExecError("call to '" + lr.name + "' passes " + std::to_string(ins.args.size()) +
                            " arguments, expected " + std::to_string(lr.params.size()));
        qr.in_handle = in_handle_of(qt);
        qr.out_handle = out_handle_of(qt);
        inst.shm.alloc(mem::Region::LRIn, qr.in_handle, ins.args.size());
        for (size_t i = 0; i < ins.args.size(); ++i)
            inst.shm.write(mem::Region::LRIn, qr.in_handle, i,
                           inst.host.eval_int(ins.args[i], "routine argument"), mem::Proc::CPS);
        inst.shm.alloc(mem::Region::LROut, qr.out_handle, lr.returns.size());
        return;
    }

    const lang::RequestRoutine& rr = *q.rr;
    qr.out_handle = out_handle_of(qt);
    const size_t outs = rr.typ == lang::RequestType::MeasureDirectly
                            ? static_cast<size_t>(rr.concrete_pairs())
                            : 0;
    inst.shm.alloc(mem::Region::RROut, qr.out_handle, outs);
    qr.cb_tids.clear();
    int cur = qt;
    while (true) {
        int next_cb = -1;
        for (int s : n.graph.succ(cur))
            if (n.graph.task(s).kind == task::TaskKind::Callback) {
                next_cb = s;
                break;
            }
        if (next_cb < 0) break;
        qr.cb_tids.push_back(next_cb);
        cur = next_cb;
    }
    if (rr.callback_type == lang::CallbackType::Sequential &&
        static_cast<int>(qr.cb_tids.size()) != rr.concrete_pairs())
        throw InternalError("per-pair callback chain does not match the pair count");
}

void Simulation::do_post_call(Node& n, int tid) {
    const task::Task& post = n.graph.task(tid);
    Instance& inst = inst_at(post.pid);
    // find the producing quantum task: a routine body, a pair task, or the
    // tail of a callback chain leading back to its pair task
    int qt = -1;
    bool request = false;
    for (int p : n.graph.pred(tid)) {
        const task::TaskKind k = n.graph.task(p).kind;
        if (k == task::TaskKind::LocalRoutine) {
            qt = p;
            break;
        }
        if (is_pair_kind(k)) {
            qt = p;
            request = true;
            break;
        }
        if (k == task::TaskKind::Callback) {
            int cur = p;
            while (n.graph.task(cur).kind == task::TaskKind::Callback) {
                int back = -1;
                for (int pp : n.graph.pred(cur)) {
                    const task::TaskKind kk = n.graph.task(pp).kind;
                    if (kk == task::TaskKind::Callback || is_pair_kind(kk)) {
                        back = pp;
                        break;
                    }
                }
                if (back < 0) throw InternalError("callback chain without a pair task");
                cur = back;
            }
            qt = cur;
            request = true;
            break;
        }
    }
    if (qt < 0) throw InternalError("call epilogue without a producing task");

    const task::Task& q = n.graph.task(qt);
    TaskRun& qr = n.runs[static_cast<size_t>(qt)];
    if (qr.out_handle.empty()) throw InternalError("call epilogue before its prologue");

    const mem::Region region = request ? mem::Region::RROut : mem::Region::LROut;
    const size_t count = inst.shm.size(region, qr.out_handle);
    std::vector<i32> values(count);
    for (size_t i = 0; i < count; ++i)
        values[i] = inst.shm.read(region, qr.out_handle, i, mem::Proc::CPS);

    // outputs land in the host variables named by the routine's return list
    if (!request) {
        const lang::LocalRoutine& lr = *q.lr;
        if (values.size() != lr.returns.size())
            throw InternalError("routine output size does not match its return list");
        for (size_t i = 0; i < values.size(); ++i) inst.host.set(lr.returns[i], values[i]);
    } else {
        const lang::RequestRoutine& rr = *q.rr;
        if (!rr.returns.empty()) {
            if (rr.typ != lang::RequestType::MeasureDirectly)
                throw ExecError("request '" + rr.name + "' produces no outcomes to bind");
            if (rr.returns_vector) {
                inst.host.set(rr.returns[0], values);
            } else {
                if (values.size() != rr.returns.size())
                    throw InternalError("pair outcomes do not match the request's return list");
                for (size_t i = 0; i < values.size(); ++i)
                    inst.host.set(rr.returns[i], values[i]);
            }
        }
    }

    inst.shm.free(region, qr.out_handle);
    if (!request && !qr.in_handle.empty()) inst.shm.free(mem::Region::LRIn, qr.in_handle);
}

// --- quantum processor ---------------------------------------------------------

void Simulation::try_dispatch_qps(Node& n) {
    static const std::vector<time_ns> no_eff;
    while (n.qps_running < 0 && !n.qps_ready.empty()) {
        const auto& eff = cfg_.policy == sched::Policy::Edf ? eff_deadlines(n) : no_eff;
        int chosen = -1;
        for (int tid : n.qps_ready.ordered(cfg_.policy, eff)) {
            const task::Task& t = n.graph.task(tid);
            if (is_pair_kind(t.kind) || n.qmem.can_allocate(t.pid, t.lr->uses)) {
                chosen = tid;
                break;
            }
        }
        if (chosen < 0) return; // every ready quantum task waits on qubits
        n.qps_ready.erase(chosen);
        TaskRun& r = n.runs[static_cast<size_t>(chosen)];
        r.st = TaskRun::St::Running;
        n.qps_running = chosen;
        note(n, 'Q', chosen, "dispatch");
        const task::Task& t = n.graph.task(chosen);
        if (is_pair_kind(t.kind))
            dispatch_pair_task(n, chosen);
        else
            dispatch_local_routine(n, chosen, t.kind == task::TaskKind::Callback);
    }
}

bool Simulation::dispatch_local_routine(Node& n, int tid, bool is_callback) {
    const task::Task& t = n.graph.task(tid);
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    Instance& inst = inst_at(t.pid);
    const lang::LocalRoutine& lr = *t.lr;
    for (int v : lr.uses) {
        if (!n.qmem.unit().valid_id(v))
            throw ExecError("routine '" + lr.name + "' uses virtual qubit " + std::to_string(v) +
                            " outside the unit module");
        if (!n.qmem.phys_of(t.pid, v)) n.qmem.allocate(t.pid, v);
    }
    mem::Region in_region = mem::Region::LRIn;
    if (is_callback) {
        // a collected callback runs once, after every pair has landed; its
        // input array carries the pair count
        in_region = mem::Region::CRIn;
        r.in_handle = in_handle_of(tid);
        r.out_handle = out_handle_of(tid);
        inst.shm.alloc(mem::Region::CRIn, r.in_handle, 1);
        inst.shm.write(mem::Region::CRIn, r.in_handle, 0, t.rr->concrete_pairs(), mem::Proc::QPS);
        inst.shm.alloc(mem::Region::LROut, r.out_handle, lr.returns.size());
    } else if (r.in_handle.empty()) {
        throw InternalError("routine dispatched before its prologue ran");
    }
    const nqasm::ExecResult res = n.vm->run(lr, t.pid, inst.shm, in_region, r.in_handle,
                                            r.out_handle, eq_.now(), rng_);
    eq_.in(res.duration, Signal::Effect,
           [this, &n, tid, is_callback] { finish_local_routine(n, tid, is_callback); });
    return true;
}

void Simulation::finish_local_routine(Node& n, int tid, bool is_callback) {
    const task::Task& t = n.graph.task(tid);
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    Instance& inst = inst_at(t.pid);
    const lang::LocalRoutine& lr = *t.lr;
    for (int v : lr.uses) {
        if (std::find(lr.keeps.begin(), lr.keeps.end(), v) != lr.keeps.end()) continue;
        if (n.qmem.phys_of(t.pid, v)) n.qmem.free(t.pid, v);
    }
    if (is_callback) {
        if (!r.in_handle.empty()) inst.shm.free(mem::Region::CRIn, r.in_handle);
        if (!r.out_handle.empty()) inst.shm.free(mem::Region::LROut, r.out_handle);
    }
    finish_task(n, tid);
}

void Simulation::dispatch_pair_task(Node& n, int tid) {
    const task::Task& t = n.graph.task(tid);
    net::EprRequest req;
    req.node = n.id;
    req.pid = t.pid;
    req.rr = t.rr;
    req.on_pair = [this, &n, tid](const net::PairEvent& e) {
        const task::Task& pt = n.graph.task(tid);
        TaskRun& r = n.runs[static_cast<size_t>(tid)];
        Instance& inst = inst_at(pt.pid);
        const lang::RequestRoutine& rr = *pt.rr;
        if (rr.typ == lang::RequestType::MeasureDirectly)
            inst.shm.write(mem::Region::RROut, r.out_handle, static_cast<size_t>(e.pair_index),
                           e.outcome, mem::Proc::QPS);
        if (rr.callback_type != lang::CallbackType::Sequential) return;
        const int cb_tid = r.cb_tids.at(static_cast<size_t>(e.pair_index));
        const lang::LocalRoutine& cb = *n.graph.task(cb_tid).lr;
        TaskRun& cr = n.runs[static_cast<size_t>(cb_tid)];
        cr.st = TaskRun::St::Running; // runs nested inside the pair task
        const time_ns start = std::max(eq_.now(), r.nested_free);
        cr.in_handle = in_handle_of(cb_tid);
        cr.out_handle = out_handle_of(cb_tid);
        inst.shm.alloc(mem::Region::CRIn, cr.in_handle, 1);
        inst.shm.write(mem::Region::CRIn, cr.in_handle, 0, e.pair_index, mem::Proc::QPS);
        inst.shm.alloc(mem::Region::LROut, cr.out_handle, cb.returns.size());
        // a per-pair callback may map extra storage qubits, but never a
        // communication qubit: those are landing slots for pairs still in flight
        for (int v : cb.uses) {
            if (!n.qmem.unit().valid_id(v))
                throw ExecError("callback '" + cb.name + "' uses virtual qubit " +
                                std::to_string(v) + " outside the unit module");
            if (!n.qmem.phys_of(pt.pid, v) && !n.qmem.unit().is_comm(v))
                n.qmem.allocate(pt.pid, v);
        }
        note(n, 'Q', cb_tid, "dispatch");
        const nqasm::ExecResult res = n.vm->run(cb, pt.pid, inst.shm, mem::Region::CRIn,
                                                cr.in_handle, cr.out_handle, start, rng_);
        r.nested_free = start + res.duration;
        eq_.at(r.nested_free, Signal::Effect,
               [this, &n, cb_tid] { finish_local_routine(n, cb_tid, true); });
    };
    req.on_done = [this, &n, tid](time_ns) {
        const time_ns fin = std::max(eq_.now(), n.runs[static_cast<size_t>(tid)].nested_free);
        eq_.at(fin, Signal::Effect, [this, &n, tid] { finish_task(n, tid); });
    };
    entdist_->submit(std::move(req));
}

// --- completion -------------------------------------------------------------------

void Simulation::finish_task(Node& n, int tid) {
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    if (r.st == TaskRun::St::Done) throw InternalError("task finished twice");
    r.st = TaskRun::St::Done;
    if (n.cps_running == tid) n.cps_running = -1;
    if (n.qps_running == tid) n.qps_running = -1;
    const task::Task& t = n.graph.task(tid);
    note(n, task::is_cps_task(t.kind) ? 'C' : 'Q', tid, "finish");
    Instance& inst = inst_at(t.pid);
    if (r.is_block_exit) inst.block_exit_finish[t.block] = eq_.now();
    --inst.open_tasks;
    for (int s : n.graph.succ(tid)) {
        TaskRun& sr = n.runs[static_cast<size_t>(s)];
        if (--sr.preds_left == 0 && sr.st == TaskRun::St::Pending && !sr.nested)
            make_ready(n, s);
    }
    entdist_->poke();
    if (inst.open_tasks == 0 && !inst.res.finished) advance_flow(inst);
    kick(n);
}

void Simulation::advance_flow(Instance& inst) {
    if (inst.full_graph || inst.host.returned) {
        finish_instance(inst);
        return;
    }
    const int nb = inst.branch_to.value_or(inst.cur_block + 1);
    inst.branch_to.reset();
    if (nb >= static_cast<int>(prog_of(inst).blocks.size())) {
        finish_instance(inst);
        return;
    }
    create_block_tasks(inst, nb);
}

void Simulation::finish_instance(Instance& inst) {
    inst.res.finished = true;
    inst.res.finish = eq_.now();
    inst.res.results = inst.host.results;
    --unfinished_;
    // held qubits go back to the pool so other instances can proceed
    node_at(inst.node).qmem.free_instance(inst.pid);
    entdist_->poke();
}

void Simulation::on_message(const net::Endpoint& at) {
    Node& n = node_at(at.node);
    const auto it = n.waiting_msg.find({at.pid, at.socket});
    if (it == n.waiting_msg.end()) return; // nobody is waiting; the inbox keeps it
    const int tid = it->second;
    n.waiting_msg.erase(it);
    TaskRun& r = n.runs[static_cast<size_t>(tid)];
    if (r.st != TaskRun::St::Waiting) throw InternalError("woken task was not waiting");
    r.st = TaskRun::St::Ready;
    n.cps_ready.insert(tid);
    note(n, 'C', tid, "wake");
    kick(n);
}

// --- results ------------------------------------------------------------------------

time_ns Simulation::now() const { return eq_.now(); }

int Simulation::num_instances() const { return static_cast<int>(instances_.size()); }

const InstanceResult& Simulation::result(int pid) const {
    if (pid < 0 || pid >= static_cast<int>(instances_.size()))
        throw SetupError("unknown instance id " + std::to_string(pid));
    return instances_[static_cast<size_t>(pid)]->res;
}

time_ns Simulation::makespan() const {
    time_ns m = 0;
    for (const auto& inst : instances_)
        if (inst->res.finished) m = std::max(m, inst->res.finish);
    return m;
}

net::EntDist& Simulation::entdist() { return *entdist_; }

const task::TaskGraph& Simulation::node_graph(int node_id) const {
    if (node_id < 0 || node_id >= static_cast<int>(nodes_.size()))
        throw SetupError("unknown node id " + std::to_string(node_id));
    return nodes_[static_cast<size_t>(node_id)]->graph;
}

void Simulation::note(Node& n, char proc, int tid, const std::string& what) {
    if (!cfg_.record_trace) return;
    trace_.push_back(TraceLine{eq_.now(), n.info.name, proc, tid,
                               what + " " + n.graph.task(tid).label()});
}

std::string Simulation::trace_text() const {
    std::ostringstream os;
    for (const auto& l : trace_)
        os << l.t << ' ' << l.node << ' ' << (l.proc == 'C' ? "CPS" : "QPS") << ' ' << l.task
           << ' ' << l.what << '\n';
    return os.str();
}

} // namespace qnsim::sim
