#pragma once
// Scenario files: a complete simulation setup in the key-value configuration
// format — network, schedule, program batches, scheduler policy, and the
// success measure — plus the batch runner, statistics, and parameter sweeps.
//
//   policy = edf                 # fcfs | edf
//   baseline = false             # serial reference execution
//   seed = 1
//   timeout_policy = retry       # retry | abort
//   record_trace = false
//
//   [node.alice]                 # see the network loader for node/link keys
//   preset = generic
//   num_qubits = 2
//   [link.alice.bob]
//   cc = 100000
//   epr_duration = 1000
//
//   [schedule]
//   mode = free                  # free | pattern
//   slot_len = 100000            # pattern only
//   offset = 0
//   pattern = each:sender        # comma list; see ScheduleSpec
//
//   [batch.sender]
//   program = teleport_send.qnp  # relative to the scenario file
//   node = alice
//   count = 20
//   pair_with = receiver         # pair i-th instance with i-th of that batch
//   pair_offset = 0              # shift into the peer batch
//   input.peer = @node.bob       # node-id reference
//   input.state = 0,1,2,3,4,5    # cycled per instance index
//
//   [success]
//   kind = outcome_one           # none | outcome_one | key_equal | all_equal
//   batch = receiver
//   index = 0
//   other = sender               # key_equal second batch
//   batches = alice, bob, carol  # all_equal

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qnsim/ehi/config.hpp"
#include "qnsim/lang/ast.hpp"
#include "qnsim/sim/simulation.hpp"

namespace qnsim::scn {

struct BatchSpec {
    std::string name;
    std::string node;
    std::string program_path; // as resolved for loading
    lang::Program program;    // parsed and validated
    int count = 1;
    std::string pair_with; // peer batch name, empty when unpaired
    int pair_offset = 0;   // index shift into the peer batch
    // input name -> value cycle; instance i takes values[i % size]; the
    // special value "@node.<name>" resolves to that node's id
    std::map<std::string, std::vector<std::string>> inputs;
};

enum class SuccessKind { None, OutcomeOne, KeyEqual, AllEqual };

struct SuccessSpec {
    SuccessKind kind = SuccessKind::None;
    std::string batch;                 // outcome_one / key_equal first batch
    std::string other;                 // key_equal second batch
    std::vector<std::string> batches;  // all_equal; outcome_one union (optional)
    int index = 0;                     // inspected result slot
};

// Slot pattern entries (comma list in the `pattern` key):
//   each:<batch>        one exact slot per paired instance of the batch
//   any:<node>:<node>   a wildcard slot for that node pair
//   gap                 an idle slot
struct ScheduleSpec {
    bool free = true;
    time_ns slot_len = 0;
    time_ns offset = 0;
    std::vector<std::string> pattern;
};

struct Scenario {
    std::string origin;
    ehi::LoadedNetwork net;
    sim::SimConfig cfg; // schedule is filled in at build time from `schedule`
    ScheduleSpec schedule;
    std::vector<BatchSpec> batches;
    SuccessSpec success;

    const BatchSpec* find_batch(const std::string& name) const;
};

// Loads and validates a scenario. Program paths resolve against `base_dir`
// (for load_scenario_file: the scenario file's directory).
Scenario load_scenario_file(const std::string& path);
Scenario load_scenario_text(const std::string& text, const std::string& origin,
                            const std::string& base_dir);
Scenario load_scenario_cfg(const ehi::KvConfig& cfg, const std::string& base_dir);

// A scenario materialized into a simulation, before or after running.
struct BuiltScenario {
    std::unique_ptr<sim::Simulation> sim;
    std::map<std::string, std::vector<int>> batch_pids; // batch name -> pids
};

// Creates nodes, links, instances, pairings and the slot schedule. `seed`
// overrides the scenario's seed when given.
BuiltScenario build_scenario(const Scenario& sc, std::optional<u64> seed = std::nullopt);

struct InstanceStat {
    int pid = -1;
    std::string batch;
    bool finished = false;
    time_ns finish = 0;
    std::vector<i32> results;
};

struct RunStats {
    bool deadlocked = false;
    time_ns makespan = 0;
    int trials = 0;    // success-evaluable units
    int successes = 0;
    std::vector<InstanceStat> instances;
    std::string trace; // empty unless the scenario records one

    double success_rate() const { return trials > 0 ? double(successes) / trials : 0.0; }
    // Binomial standard error of the success rate.
    double success_sigma() const;
};

// Runs a built scenario to completion and evaluates the success measure.
RunStats collect_stats(const Scenario& sc, BuiltScenario& built);

// build + run + collect in one step.
RunStats run_scenario(const Scenario& sc, std::optional<u64> seed = std::nullopt);

// --- output files ------------------------------------------------------------------

std::string stats_json(const Scenario& sc, u64 seed, const RunStats& rs);
// Header + one data row per entry; `label` tags the row (seed or sweep cell).
std::string stats_csv_header();
std::string stats_csv_row(const std::string& label, const Scenario& sc, const RunStats& rs);

// --- parameter sweeps --------------------------------------------------------------

// One sweep axis: a configuration key swept over values. `section` is the
// full section name ("" for top-level keys), e.g. section "link.alice.bob",
// key "cc".
struct SweepAxis {
    std::string section;
    std::string key;
    std::vector<std::string> values;
};

struct SweepCell {
    std::map<std::string, std::string> overrides; // "section/key" -> value
    int rep = 0;
    u64 seed = 0;
    RunStats stats;
};

// Grid files: repeated [axis] sections with `section`, `key`, `values` keys.
std::vector<SweepAxis> load_grid_file(const std::string& path);
std::vector<SweepAxis> load_grid_text(const std::string& text, const std::string& origin);

// Runs every grid cell `reps` times with derived seeds (deterministic per
// cell and repetition, independent of thread count). `threads` <= 0 picks the
// hardware concurrency.
std::vector<SweepCell> sweep(const std::string& scenario_text, const std::string& origin,
                             const std::string& base_dir, const std::vector<SweepAxis>& axes,
                             int reps, u64 base_seed, int threads = 0);

} // namespace qnsim::scn
