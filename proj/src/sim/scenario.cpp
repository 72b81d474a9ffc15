#include "qnsim/sim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qnsim/net/schedule.hpp"

namespace qnsim::scn {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SetupError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

sched::Policy parse_policy(const std::string& s, const std::string& origin) {
    if (s == "fcfs") return sched::Policy::Fcfs;
    if (s == "edf") return sched::Policy::Edf;
    throw SetupError(origin + ": unknown policy '" + s + "' (expected fcfs or edf)");
}

net::TimeoutPolicy parse_timeout_policy(const std::string& s, const std::string& origin) {
    if (s == "retry") return net::TimeoutPolicy::Retry;
    if (s == "abort") return net::TimeoutPolicy::Abort;
    throw SetupError(origin + ": unknown timeout_policy '" + s + "' (expected retry or abort)");
}

SuccessKind parse_success_kind(const std::string& s, const std::string& origin) {
    if (s == "none") return SuccessKind::None;
    if (s == "outcome_one") return SuccessKind::OutcomeOne;
    if (s == "key_equal") return SuccessKind::KeyEqual;
    if (s == "all_equal") return SuccessKind::AllEqual;
    throw SetupError(origin + ": unknown success kind '" + s + "'");
}

} // namespace

const BatchSpec* Scenario::find_batch(const std::string& name) const {
    for (const auto& b : batches)
        if (b.name == name) return &b;
    return nullptr;
}

Scenario load_scenario_file(const std::string& path) {
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return load_scenario_cfg(ehi::KvConfig::parse_file(path), dir);
}

Scenario load_scenario_text(const std::string& text, const std::string& origin,
                            const std::string& base_dir) {
    return load_scenario_cfg(ehi::KvConfig::parse_string(text, origin), base_dir);
}

Scenario load_scenario_cfg(const ehi::KvConfig& cfg, const std::string& base_dir) {
    Scenario sc;
    sc.origin = cfg.origin();
    const ehi::KvSection& top = cfg.top();

    sc.cfg.policy = parse_policy(top.get_str("policy", "fcfs"), sc.origin);
    sc.cfg.linear_baseline = top.get_bool("baseline", false);
    sc.cfg.seed = static_cast<u64>(top.get_i64("seed", 1));
    sc.cfg.timeout_mult = top.get_f64("timeout_mult", sc.cfg.timeout_mult);
    sc.cfg.timeout_policy = parse_timeout_policy(top.get_str("timeout_policy", "retry"), sc.origin);
    sc.cfg.record_trace = top.get_bool("record_trace", false);
    sc.cfg.max_events = static_cast<u64>(top.get_i64("max_events", static_cast<i64>(sc.cfg.max_events)));

    sc.net = ehi::load_network(cfg);
    if (sc.net.node_order.empty()) throw SetupError(sc.origin + ": scenario declares no nodes");

    if (const ehi::KvSection* ss = cfg.find("schedule")) {
        const std::string mode = ss->get_str("mode", "free");
        if (mode == "free") {
            sc.schedule.free = true;
        } else if (mode == "pattern") {
            sc.schedule.free = false;
            sc.schedule.slot_len = ss->req_i64("slot_len");
            sc.schedule.offset = ss->get_i64("offset", 0);
            sc.schedule.pattern = ss->get_list("pattern");
            if (sc.schedule.pattern.empty())
                throw SetupError(sc.origin + ": pattern schedule without pattern entries");
        } else {
            throw SetupError(sc.origin + ": unknown schedule mode '" + mode + "'");
        }
    }

    for (const ehi::KvSection* bs : cfg.with_prefix("batch.")) {
        BatchSpec b;
        b.name = bs->name.substr(6);
        if (b.name.empty()) throw SetupError(sc.origin + ": batch section without a name");
        if (sc.find_batch(b.name)) throw SetupError(sc.origin + ": duplicate batch '" + b.name + "'");
        b.node = bs->req_str("node");
        if (!sc.net.nodes.count(b.node))
            throw SetupError(sc.origin + ": batch '" + b.name + "' names unknown node '" + b.node +
                             "'");
        b.count = static_cast<int>(bs->get_i64("count", 1));
        if (b.count <= 0)
            throw SetupError(sc.origin + ": batch '" + b.name + "' has non-positive count");
        b.pair_with = bs->get_str("pair_with", "");
        b.pair_offset = static_cast<int>(bs->get_i64("pair_offset", 0));
        const std::string rel = bs->req_str("program");
        b.program_path =
            base_dir.empty() ? rel : (std::filesystem::path(base_dir) / rel).string();
        b.program = lang::parse_program(read_file(b.program_path), b.program_path);
        const DiagList diags = lang::validate_program(b.program);
        if (!diags.empty())
            throw SetupError("program " + b.program_path + " is invalid:\n" + join_diags(diags));
        for (const auto& [key, value] : bs->entries) {
            if (key.rfind("input.", 0) != 0) continue;
            const std::string name = key.substr(6);
            std::vector<std::string> vals;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trimmed(item);
                if (!item.empty()) vals.push_back(item);
            }
            if (vals.empty())
                throw SetupError(sc.origin + ": batch '" + b.name + "' input '" + name +
                                 "' has no values");
            b.inputs[name] = std::move(vals);
        }
        sc.batches.push_back(std::move(b));
    }
    if (sc.batches.empty()) throw SetupError(sc.origin + ": scenario declares no batches");

    for (const auto& b : sc.batches) {
        if (b.pair_with.empty()) continue;
        const BatchSpec* peer = sc.find_batch(b.pair_with);
        if (!peer)
            throw SetupError(sc.origin + ": batch '" + b.name + "' pairs with unknown batch '" +
                             b.pair_with + "'");
        if (b.pair_offset < 0 || b.pair_offset + b.count > peer->count)
            throw SetupError(sc.origin + ": batch '" + b.name + "' pairs instances [" +
                             std::to_string(b.pair_offset) + ", " +
                             std::to_string(b.pair_offset + b.count) + ") of '" + b.pair_with +
                             "' which only has " + std::to_string(peer->count));
    }

    if (const ehi::KvSection* su = cfg.find("success")) {
        sc.success.kind = parse_success_kind(su->get_str("kind", "none"), sc.origin);
        sc.success.batch = su->get_str("batch", "");
        sc.success.other = su->get_str("other", "");
        sc.success.batches = su->get_list("batches");
        sc.success.index = static_cast<int>(su->get_i64("index", 0));
        auto need = [&](const std::string& name) {
            if (!sc.find_batch(name))
                throw SetupError(sc.origin + ": success section names unknown batch '" + name +
                                 "'");
        };
        switch (sc.success.kind) {
        case SuccessKind::None: break;
        case SuccessKind::OutcomeOne:
            // either one batch or a union of batches
            if (sc.success.batches.empty()) {
                need(sc.success.batch);
            } else {
                for (const auto& n : sc.success.batches) need(n);
            }
            break;
        case SuccessKind::KeyEqual:
            need(sc.success.batch);
            need(sc.success.other);
            break;
        case SuccessKind::AllEqual:
            if (sc.success.batches.size() < 2)
                throw SetupError(sc.origin + ": all_equal needs at least two batches");
            for (const auto& n : sc.success.batches) need(n);
            break;
        }
    }
    return sc;
}

// --- building ----------------------------------------------------------------------

namespace {

// The symbol table for instantiating a batch's programs: node parameters plus
// the link the batch is paired over (for CC / epr_duration symbols).
const ehi::LinkInfo* batch_link(const Scenario& sc, const BatchSpec& b) {
    std::string peer_node;
    if (!b.pair_with.empty()) {
        peer_node = sc.find_batch(b.pair_with)->node;
    } else {
        for (const auto& other : sc.batches)
            if (other.pair_with == b.name) peer_node = other.node;
    }
    if (!peer_node.empty())
        if (const ehi::LinkInfo* li = sc.net.network.find_link(b.node, peer_node)) return li;
    // otherwise: any link touching this node, in deterministic map order
    for (const auto& [key, li] : sc.net.network.links)
        if (key.first == b.node || key.second == b.node) return &li;
    return nullptr;
}

i64 resolve_input(const Scenario& sc, const std::string& raw, const std::string& context) {
    if (raw.rfind("@node.", 0) == 0) {
        const std::string name = raw.substr(6);
        for (size_t i = 0; i < sc.net.node_order.size(); ++i)
            if (sc.net.node_order[i] == name) return static_cast<i64>(i);
        throw SetupError(context + ": input references unknown node '" + name + "'");
    }
    return ehi::parse_int(raw, context);
}

} // namespace

BuiltScenario build_scenario(const Scenario& sc, std::optional<u64> seed) {
    sim::SimConfig cfg = sc.cfg;
    if (seed) cfg.seed = *seed;
    BuiltScenario out;
    out.sim = std::make_unique<sim::Simulation>(cfg);
    sim::Simulation& sim = *out.sim;

    for (const auto& name : sc.net.node_order) sim.add_node(sc.net.nodes.at(name));
    for (const auto& [key, li] : sc.net.network.links) sim.set_link(key.first, key.second, li);

    for (const auto& b : sc.batches) {
        const ehi::NodeInfo& ni = sc.net.nodes.at(b.node);
        const ehi::SymbolTable syms = ehi::make_symbols(ni, batch_link(sc, b));
        const int node_id = sim.node_id(b.node);
        std::vector<int>& pids = out.batch_pids[b.name];
        for (int i = 0; i < b.count; ++i) {
            std::map<std::string, i64> inputs;
            for (const auto& [name, cycle] : b.inputs)
                inputs[name] = resolve_input(sc, cycle[static_cast<size_t>(i) % cycle.size()],
                                             sc.origin + ": batch " + b.name);
            pids.push_back(sim.add_instance(node_id, lang::instantiate(b.program, inputs, syms)));
        }
    }

    for (const auto& b : sc.batches) {
        if (b.pair_with.empty()) continue;
        const auto& mine = out.batch_pids.at(b.name);
        const auto& theirs = out.batch_pids.at(b.pair_with);
        for (int i = 0; i < b.count; ++i)
            sim.pair_instances(mine[static_cast<size_t>(i)],
                               theirs[static_cast<size_t>(b.pair_offset + i)]);
    }

    if (!sc.schedule.free) {
        std::vector<net::SlotEntry> entries;
        for (const std::string& raw : sc.schedule.pattern) {
            if (raw == "gap") {
                entries.push_back(net::SlotEntry::gap());
                continue;
            }
            std::vector<std::string> parts;
            std::stringstream ss(raw);
            std::string item;
            while (std::getline(ss, item, ':')) parts.push_back(trimmed(item));
            if (parts.size() == 3 && parts[0] == "any") {
                entries.push_back(
                    net::SlotEntry::any(sim.node_id(parts[1]), sim.node_id(parts[2])));
            } else if (parts.size() == 2 && parts[0] == "each") {
                const BatchSpec* b = sc.find_batch(parts[1]);
                if (!b)
                    throw SetupError(sc.origin + ": schedule entry '" + raw +
                                     "' names unknown batch");
                // find the pairing relation this batch participates in
                const BatchSpec* owner = !b->pair_with.empty() ? b : nullptr;
                if (!owner)
                    for (const auto& other : sc.batches)
                        if (other.pair_with == b->name) owner = &other;
                if (!owner)
                    throw SetupError(sc.origin + ": schedule entry '" + raw +
                                     "' names an unpaired batch");
                const BatchSpec* peer = sc.find_batch(owner->pair_with);
                const int na = sim.node_id(owner->node);
                const int nb = sim.node_id(peer->node);
                const auto& mine = out.batch_pids.at(owner->name);
                const auto& theirs = out.batch_pids.at(peer->name);
                for (int i = 0; i < owner->count; ++i)
                    entries.push_back(net::SlotEntry::exact(
                        na, mine[static_cast<size_t>(i)], nb,
                        theirs[static_cast<size_t>(owner->pair_offset + i)]));
            } else {
                throw SetupError(sc.origin + ": bad schedule entry '" + raw + "'");
            }
        }
        sim.set_schedule(
            net::NetworkSchedule::pattern(sc.schedule.slot_len, entries, sc.schedule.offset));
    }
    return out;
}

// --- statistics --------------------------------------------------------------------

double RunStats::success_sigma() const {
    if (trials <= 0) return 0.0;
    const double p = success_rate();
    return std::sqrt(p * (1.0 - p) / trials);
}

namespace {

// Batches an outcome_one measure ranges over: the union list when given,
// otherwise the single batch.
std::vector<std::string> one_batches(const SuccessSpec& su) {
    if (!su.batches.empty()) return su.batches;
    return {su.batch};
}

// Success of the i-th unit under the scenario's measure; a missing or
// unfinished result counts as failure. For outcome_one, units enumerate every
// instance of every listed batch; for the comparisons, unit i is the aligned
// i-th instance of each batch.
bool unit_success(const Scenario& sc, const BuiltScenario& built, const sim::Simulation& sim,
                  int i) {
    const auto& su = sc.success;
    auto res = [&](const std::string& batch, int k) -> const sim::InstanceResult& {
        return sim.result(built.batch_pids.at(batch)[static_cast<size_t>(k)]);
    };
    switch (su.kind) {
    case SuccessKind::None: return false;
    case SuccessKind::OutcomeOne: {
        for (const auto& name : one_batches(su)) {
            const int count = sc.find_batch(name)->count;
            if (i >= count) {
                i -= count;
                continue;
            }
            const auto& r = res(name, i);
            return r.finished && static_cast<int>(r.results.size()) > su.index &&
                   r.results[static_cast<size_t>(su.index)] == 1;
        }
        return false;
    }
    case SuccessKind::KeyEqual: {
        const auto& a = res(su.batch, i);
        const auto& b = res(su.other, i);
        return a.finished && b.finished && !a.results.empty() && a.results == b.results;
    }
    case SuccessKind::AllEqual: {
        const auto& first = res(su.batches.front(), i);
        if (!first.finished || static_cast<int>(first.results.size()) <= su.index) return false;
        const i32 v = first.results[static_cast<size_t>(su.index)];
        for (size_t n = 1; n < su.batches.size(); ++n) {
            const auto& r = res(su.batches[n], i);
            if (!r.finished || static_cast<int>(r.results.size()) <= su.index ||
                r.results[static_cast<size_t>(su.index)] != v)
                return false;
        }
        return true;
    }
    }
    return false;
}

int success_trials(const Scenario& sc) {
    switch (sc.success.kind) {
    case SuccessKind::None: return 0;
    case SuccessKind::OutcomeOne: {
        int total = 0;
        for (const auto& name : one_batches(sc.success)) total += sc.find_batch(name)->count;
        return total;
    }
    case SuccessKind::KeyEqual: {
        const int a = sc.find_batch(sc.success.batch)->count;
        const int b = sc.find_batch(sc.success.other)->count;
        if (a != b)
            throw SetupError(sc.origin + ": key_equal batches have different counts");
        return a;
    }
    case SuccessKind::AllEqual: {
        int n = sc.find_batch(sc.success.batches.front())->count;
        for (const auto& name : sc.success.batches)
            if (sc.find_batch(name)->count != n)
                throw SetupError(sc.origin + ": all_equal batches have different counts");
        return n;
    }
    }
    return 0;
}

} // namespace

RunStats collect_stats(const Scenario& sc, BuiltScenario& built) {
    sim::Simulation& sim = *built.sim;
    sim.run();
    RunStats rs;
    rs.deadlocked = sim.deadlocked();
    rs.makespan = sim.makespan();
    for (const auto& b : sc.batches) {
        for (int pid : built.batch_pids.at(b.name)) {
            const sim::InstanceResult& r = sim.result(pid);
            rs.instances.push_back(InstanceStat{pid, b.name, r.finished, r.finish, r.results});
        }
    }
    rs.trials = success_trials(sc);
    for (int i = 0; i < rs.trials; ++i)
        if (unit_success(sc, built, sim, i)) ++rs.successes;
    rs.trace = sim.trace_text();
    return rs;
}

RunStats run_scenario(const Scenario& sc, std::optional<u64> seed) {
    BuiltScenario built = build_scenario(sc, seed);
    return collect_stats(sc, built);
}

// --- output files ------------------------------------------------------------------

std::string stats_json(const Scenario& sc, u64 seed, const RunStats& rs) {
    nlohmann::json j;
    j["scenario"] = sc.origin;
    j["seed"] = seed;
    j["policy"] = sc.cfg.policy == sched::Policy::Edf ? "edf" : "fcfs";
    j["baseline"] = sc.cfg.linear_baseline;
    j["deadlocked"] = rs.deadlocked;
    j["makespan_ns"] = rs.makespan;
    j["trials"] = rs.trials;
    j["successes"] = rs.successes;
    j["success_rate"] = rs.success_rate();
    j["success_sigma"] = rs.success_sigma();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& is : rs.instances) {
        nlohmann::json e;
        e["pid"] = is.pid;
        e["batch"] = is.batch;
        e["finished"] = is.finished;
        e["finish_ns"] = is.finish;
        e["results"] = is.results;
        arr.push_back(std::move(e));
    }
    j["instances"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::string stats_csv_header() {
    return "label,policy,baseline,deadlocked,makespan_ns,trials,successes,success_rate,"
           "success_sigma\n";
}

std::string stats_csv_row(const std::string& label, const Scenario& sc, const RunStats& rs) {
    std::ostringstream os;
    os << label << ',' << (sc.cfg.policy == sched::Policy::Edf ? "edf" : "fcfs") << ','
       << (sc.cfg.linear_baseline ? 1 : 0) << ',' << (rs.deadlocked ? 1 : 0) << ',' << rs.makespan
       << ',' << rs.trials << ',' << rs.successes << ',' << rs.success_rate() << ','
       << rs.success_sigma() << '\n';
    return os.str();
}

// --- sweeps ------------------------------------------------------------------------

std::vector<SweepAxis> load_grid_file(const std::string& path) {
    return load_grid_text(read_file(path), path);
}

std::vector<SweepAxis> load_grid_text(const std::string& text, const std::string& origin) {
    const ehi::KvConfig cfg = ehi::KvConfig::parse_string(text, origin);
    std::vector<SweepAxis> axes;
    for (const ehi::KvSection* sec : cfg.all("axis")) {
        SweepAxis ax;
        ax.section = sec->get_str("section", "");
        ax.key = sec->req_str("key");
        ax.values = sec->get_list("values");
        if (ax.values.empty()) throw SetupError(origin + ": axis without values");
        axes.push_back(std::move(ax));
    }
    if (axes.empty()) throw SetupError(origin + ": grid file declares no [axis] sections");
    return axes;
}

std::vector<SweepCell> sweep(const std::string& scenario_text, const std::string& origin,
                             const std::string& base_dir, const std::vector<SweepAxis>& axes,
                             int reps, u64 base_seed, int threads) {
    if (reps <= 0) throw SetupError("sweep needs a positive repetition count");
    // enumerate the grid product
    std::vector<std::map<std::string, std::string>> cells{{}};
    for (const auto& ax : axes) {
        std::vector<std::map<std::string, std::string>> next;
        for (const auto& base : cells)
            for (const auto& v : ax.values) {
                auto c = base;
                c[ax.section + "/" + ax.key] = v;
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }

    std::vector<SweepCell> jobs;
    for (const auto& c : cells)
        for (int r = 0; r < reps; ++r) {
            SweepCell cell;
            cell.overrides = c;
            cell.rep = r;
            // identical rep seeds across cells: comparisons between cells are
            // paired, which sharpens monotonicity checks
            cell.seed = base_seed + static_cast<u64>(r);
            jobs.push_back(std::move(cell));
        }

    int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (nthreads <= 0) nthreads = 1;
    nthreads = std::min<int>(nthreads, static_cast<int>(jobs.size()));

    std::atomic<size_t> cursor{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                ehi::KvConfig cfg = ehi::KvConfig::parse_string(scenario_text, origin);
                for (const auto& [path, value] : jobs[i].overrides) {
                    const size_t slash = path.find('/');
                    cfg.set(path.substr(0, slash), path.substr(slash + 1), value);
                }
                const Scenario sc = load_scenario_cfg(cfg, base_dir);
                jobs[i].stats = run_scenario(sc, jobs[i].seed);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return jobs;
}

} // namespace qnsim::scn
