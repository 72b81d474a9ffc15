// Command-line front end for the node simulator.
//
//   qnsim run      --scenario s.cfg [--seed N] [--out DIR]
//   qnsim sweep    --scenario s.cfg --grid g.cfg [--reps N] [--seed N]
//                  [--threads N] [--out DIR]
//   qnsim validate --program p.qnp [--hardware PRESET] [--qubits N]
//   qnsim graph    --program p.qnp --dot out.dot [--hardware PRESET] [--qubits N]
//
// Exit codes: 0 on success, 1 when inputs fail to load or validate, 2 when a
// run deadlocks or aborts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qnsim/ehi/config.hpp"
#include "qnsim/sim/scenario.hpp"
#include "qnsim/task/graph.hpp"

using namespace qnsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitAborted = 2;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SetupError("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SetupError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ehi::NodeInfo preset_node(const std::string& hardware, int qubits) {
    return ehi::make_preset(hardware, qubits);
}

int cmd_run(const std::string& scenario_path, std::optional<u64> seed,
            const std::string& out_dir) {
    const scn::Scenario sc = scn::load_scenario_file(scenario_path);
    const u64 used_seed = seed.value_or(sc.cfg.seed);

    scn::BuiltScenario built = scn::build_scenario(sc, seed);
    const scn::RunStats rs = scn::collect_stats(sc, built);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        write_text(dir / "results.json", scn::stats_json(sc, used_seed, rs));
        write_text(dir / "stats.csv",
                   scn::stats_csv_header() + scn::stats_csv_row("run", sc, rs));
        write_text(dir / "trace.log",
                   rs.trace.empty() ? built.sim->trace_text() : rs.trace);
    }

    std::cout << "scenario:  " << scenario_path << "\n"
              << "seed:      " << used_seed << "\n"
              << "makespan:  " << rs.makespan << " ns\n";
    if (rs.trials > 0)
        std::cout << "success:   " << rs.successes << "/" << rs.trials << " = "
                  << rs.success_rate() << "\n";
    if (rs.deadlocked) {
        std::cout << "status:    deadlocked\n";
        return kExitAborted;
    }
    for (const auto& is : rs.instances)
        if (!is.finished) {
            std::cout << "status:    instance " << is.pid << " (" << is.batch
                      << ") did not finish\n";
            return kExitAborted;
        }
    std::cout << "status:    completed\n";
    return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& grid_path, int reps,
              u64 seed, int threads, const std::string& out_dir) {
    const std::string text = read_text(scenario_path);
    const std::string base_dir =
        std::filesystem::path(scenario_path).parent_path().string();
    const std::vector<scn::SweepAxis> axes = scn::load_grid_file(grid_path);
    const std::vector<scn::SweepCell> cells =
        scn::sweep(text, scenario_path, base_dir, axes, reps, seed, threads);

    // One CSV row per cell; the label packs the overrides and the repetition.
    std::ostringstream csv;
    csv << "label,rep,seed,deadlocked,makespan_ns,trials,successes,success_rate\n";
    bool any_bad = false;
    for (const auto& cell : cells) {
        std::string label;
        for (const auto& [key, value] : cell.overrides) {
            if (!label.empty()) label += ';';
            label += key + "=" + value;
        }
        csv << label << ',' << cell.rep << ',' << cell.seed << ','
            << (cell.stats.deadlocked ? 1 : 0) << ',' << cell.stats.makespan << ','
            << cell.stats.trials << ',' << cell.stats.successes << ','
            << cell.stats.success_rate() << "\n";
        any_bad = any_bad || cell.stats.deadlocked;
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text(std::filesystem::path(out_dir) / "stats.csv", csv.str());
    } else {
        std::cout << csv.str();
    }
    std::cout << "cells:     " << cells.size() << "\n";
    return any_bad ? kExitAborted : kExitOk;
}

int cmd_validate(const std::string& program_path, const std::string& hardware, int qubits) {
    const lang::Program prog = lang::parse_program_file(program_path);
    const DiagList diags = lang::validate_program(prog);
    if (!diags.empty()) {
        std::cerr << join_diags(diags) << "\n";
        return kExitInvalid;
    }
    // Instantiating against the hardware catches relative-deadline symbol and
    // task-construction problems too; parameters are bound to zero.
    const ehi::NodeInfo ni = preset_node(hardware, qubits);
    std::map<std::string, i64> inputs;
    for (const auto& p : prog.meta.params) inputs[p] = 0;
    const lang::InstantiatedProgram ip =
        lang::instantiate(prog, inputs, ehi::make_symbols(ni, nullptr));
    task::BuildContext ctx;
    ctx.node = &ni;
    for (const auto& blk : ip.prog.blocks) {
        task::TaskGraph g;
        task::create_tasks_for_block(g, ip.prog, blk, 0, 0, ctx);
    }
    std::cout << program_path << ": ok (" << prog.blocks.size() << " blocks, "
              << prog.routines.size() << " routines, " << prog.requests.size()
              << " requests; " << (task::is_predictable(prog) ? "static" : "branching")
              << " control flow)\n";
    return kExitOk;
}

int cmd_graph(const std::string& program_path, const std::string& dot_path,
              const std::string& hardware, int qubits) {
    const lang::Program prog = lang::parse_program_file(program_path);
    const DiagList diags = lang::validate_program(prog);
    if (!diags.empty()) {
        std::cerr << join_diags(diags) << "\n";
        return kExitInvalid;
    }
    const ehi::NodeInfo ni = preset_node(hardware, qubits);
    std::map<std::string, i64> inputs;
    for (const auto& p : prog.meta.params) inputs[p] = 0;
    const lang::InstantiatedProgram ip =
        lang::instantiate(prog, inputs, ehi::make_symbols(ni, nullptr));
    task::BuildContext ctx;
    ctx.node = &ni;

    std::string dot;
    if (task::is_predictable(ip.prog)) {
        const task::TaskGraph g = task::build_full_graph(ip.prog, ip.deadlines_ns, 0, ctx);
        dot = g.to_dot();
    } else {
        // Branching control flow: the block sequence is decided at run time,
        // so draw each block's task chain without cross-block edges.
        task::TaskGraph g;
        for (const auto& blk : ip.prog.blocks)
            task::create_tasks_for_block(g, ip.prog, blk, 0, 0, ctx);
        dot = g.to_dot();
    }
    write_text(dot_path, dot);
    std::cout << "wrote " << dot_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator for programmable quantum network nodes"};
    app.require_subcommand(1);

    std::string scenario_path, grid_path, program_path, dot_path;
    std::string out_dir;
    std::string hardware = "generic";
    int qubits = 2;
    int reps = 1;
    int threads = 0;
    u64 sweep_seed = 1;
    std::optional<u64> run_seed;

    CLI::App* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    u64 seed_arg = 0;
    CLI::Option* seed_opt = run->add_option("--seed", seed_arg, "override the scenario seed");
    run->add_option("--out", out_dir, "directory for stats.csv, trace.log, results.json");

    CLI::App* sw = app.add_subcommand("sweep", "Run a scenario over a parameter grid");
    sw->add_option("--scenario", scenario_path, "scenario file")->required();
    sw->add_option("--grid", grid_path, "grid file with [axis] sections")->required();
    sw->add_option("--reps", reps, "repetitions per cell");
    sw->add_option("--seed", sweep_seed, "base seed (rep i uses seed+i)");
    sw->add_option("--threads", threads, "worker threads (0 = hardware)");
    sw->add_option("--out", out_dir, "directory for stats.csv");

    CLI::App* val = app.add_subcommand("validate", "Check a program against a hardware preset");
    val->add_option("--program", program_path, "program file")->required();
    val->add_option("--hardware", hardware, "hardware preset name");
    val->add_option("--qubits", qubits, "qubit count for the preset");

    CLI::App* gr = app.add_subcommand("graph", "Write a program's task graph as DOT");
    gr->add_option("--program", program_path, "program file")->required();
    gr->add_option("--dot", dot_path, "output DOT file")->required();
    gr->add_option("--hardware", hardware, "hardware preset name");
    gr->add_option("--qubits", qubits, "qubit count for the preset");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (seed_opt->count() > 0) run_seed = seed_arg;
            return cmd_run(scenario_path, run_seed, out_dir);
        }
        if (sw->parsed()) return cmd_sweep(scenario_path, grid_path, reps, sweep_seed,
                                           threads, out_dir);
        if (val->parsed()) return cmd_validate(program_path, hardware, qubits);
        if (gr->parsed()) return cmd_graph(program_path, dot_path, hardware, qubits);
    } catch (const SetupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAborted;
    }
    return kExitOk;
}
