#include <iostream>

#include "CLI11.hpp"
#include "ctmflow_tools/pipeline.hpp"

using namespace ctmflow::tools;

int main(int argc, char** argv) {
    CLI::App app{"ctmflow: cell transmission model simulation, optimal control and robustness bounds"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string sweep;
    std::string scenario;

    auto add_common = [&](CLI::App* sub, bool needs_scenario) {
        auto* opt = sub->add_option("--scenario", scenario, "Scenario JSON file");
        if (needs_scenario) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    };
    auto add_program = [&](CLI::App* sub) {
        sub->add_option("--cost", cfg.cost, "Cost: ttt, ttd, delay, quad")->capture_default_str();
        sub->add_option("--kind", cfg.kind, "Relaxation: dta, fnc")->capture_default_str();
        sub->add_option("--epsilon", cfg.epsilon, "Supply tightening in [0,1)")->capture_default_str();
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model, "Junction model: fifo, fifo-priority, nonfifo")->capture_default_str();
    };

    auto* sim = app.add_subcommand("simulate", "Uncontrolled simulation");
    add_common(sim, true);
    add_model(sim);
    sim->add_option("--cost", cfg.cost, "Cost reported in summary.json")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "Build and solve a DTA/FNC relaxation");
    add_common(solve, true);
    add_program(solve);

    auto* syn = app.add_subcommand("synthesize", "Extract controls from an optimum and replay them");
    add_common(syn, true);
    add_program(syn);
    add_model(syn);

    auto* rob = app.add_subcommand("robustness-sweep", "Perturbed simulations and bounds over an inflow grid");
    add_common(rob, true);
    add_program(rob);
    add_model(rob);
    rob->add_option("--sweep", sweep, "Inflow perturbation grid START:STEP:END")->default_str("0:0.1:3");
    rob->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    auto* rep = app.add_subcommand("reproduce-paper", "Tables, trajectories, sweeps and tradeoff data");
    add_common(rep, false);
    rep->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    cfg.command = app.get_subcommands().front()->get_name();
    cfg.scenario = scenario;
    try {
        if (!sweep.empty()) cfg.deltas = parse_grid(sweep);
        run(cfg);
    } catch (const std::exception& e) {
        const int code = report_error(e, cfg.command, cfg.out);
        std::cerr << "ctmflow " << cfg.command << ": " << e.what() << "\n";
        return code;
    }
    std::cout << "wrote " << (cfg.out / "manifest.json").string() << "\n";
    return kOk;
}
