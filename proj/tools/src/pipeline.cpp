#include "ctmflow_tools/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace ctmflow::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

Solution solve_checked(const ConvexProgram& P) {
    Solution s = solve(P);
    if (!s.optimal())
        throw SolverError(std::string("solver returned ") + to_string(s.status) + " (" + s.method + ", " +
                          std::to_string(s.iterations) + " iterations)");
    return s;
}

template <class F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e, exit_code_for(e));
    }
}

std::string csv_of(const std::function<void(std::ostream&)>& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

std::string trajectory_subset_csv(const Network& net, const std::vector<std::pair<std::string, Trajectory>>& runs,
                                  const std::vector<int>& cell_ids) {
    std::ostringstream os;
    os << "step,cell,method,x_veh\n";
    for (const auto& [method, traj] : runs)
        for (std::size_t t = 0; t < traj.x.size(); ++t)
            for (int id : cell_ids) {
                const int i = net.index_of(id);
                os << t << ',' << id << ',' << method << ',' << format_number(traj.x[t][i]) << '\n';
            }
    return os.str();
}

ControlSchedule optimal_controls(const Scenario& s, ProgramKind kind, const CostSpec& cost, double eps,
                                 Solution* out = nullptr) {
    const ConvexProgram P = build_program(s, cost, kind, eps);
    Solution sol = solve_checked(P);
    ControlSchedule c = extract_controls(P, sol, s);
    if (out) *out = std::move(sol);
    return c;
}

json solution_json(const Solution& s) {
    return {{"objective", s.objective},
            {"status", to_string(s.status)},
            {"method", s.method},
            {"iterations", s.iterations},
            {"primal_residual", s.residuals.primal},
            {"dual_residual", s.residuals.dual},
            {"dual_objective", s.dual_objective}};
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
    double v[3];
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
        const auto colon = spec.find(':', pos);
        if ((k < 2) == (colon == std::string::npos))
            throw ConfigError("grid '" + spec + "' is not START:STEP:END");
        const std::string part = spec.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
        try {
            std::size_t used = 0;
            v[k] = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::logic_error&) {
            throw ConfigError("grid '" + spec + "' has a non-numeric field '" + part + "'");
        }
        pos = colon + 1;
    }
    const double start = v[0], step = v[1], end = v[2];
    if (!(step > 0) || !(start <= end)) throw ConfigError("grid '" + spec + "' must increase (STEP > 0, START <= END)");
    const auto n = static_cast<long>(std::floor((end - start) / step + 1e-9)) + 1;
    if (n > 1000000) throw ConfigError("grid '" + spec + "' has too many points");
    std::vector<double> out;
    for (long k = 0; k < n; ++k) out.push_back(std::round((start + k * step) * 1e12) / 1e12);
    return out;
}

CostSpec parse_cost(const std::string& name) {
    if (name == "ttt") return CostSpec::ttt();
    if (name == "quad") return CostSpec::quadratic();
    if (name == "ttd") return {CostKind::TTD, {}, {}};
    if (name == "delay") return {CostKind::Delay, {}, {}};
    throw ConfigError("unknown cost '" + name + "' (ttt, ttd, delay, quad)");
}

JunctionModel parse_model(const std::string& name) {
    if (name == "fifo") return JunctionModel::FifoProportional;
    if (name == "fifo-priority") return JunctionModel::FifoPriority;
    if (name == "nonfifo") return JunctionModel::NonFifo;
    throw ConfigError("unknown model '" + name + "' (fifo, fifo-priority, nonfifo)");
}

ProgramKind parse_kind(const std::string& name) {
    if (name == "dta") return ProgramKind::DTA;
    if (name == "fnc") return ProgramKind::FNC;
    throw ConfigError("unknown program kind '" + name + "' (dta, fnc)");
}

ArtifactSet::ArtifactSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

void ArtifactSet::write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    f << content;
    if (!f) throw ConfigError("write failed for '" + p.string() + "'");
    hashes_[name] = fnv1a64(content);
}

void ArtifactSet::write_manifest() {
    json m = json::array();
    for (const auto& [name, h] : hashes_) m.push_back({{"file", name}, {"fnv1a64", hex64(h)}});
    const std::string text = json{{"artifacts", m}}.dump(2) + "\n";
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << text;
}

StageError::StageError(std::string stage, const std::exception& cause, int code)
    : std::runtime_error(stage + ": " + cause.what()), stage_(std::move(stage)), code_(code) {}

int exit_code_for(const std::exception& e) {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->code();
    if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
    if (dynamic_cast<const SolverError*>(&e)) return kSolverError;
    if (dynamic_cast<const InvariantViolation*>(&e)) return kInvariantError;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return kConfigError;
    return 1;
}

int report_error(const std::exception& e, const std::string& stage_name, const fs::path& out) {
    const int code = exit_code_for(e);
    std::string stage_label = stage_name;
    if (const auto* s = dynamic_cast<const StageError*>(&e)) stage_label = s->stage();
    const char* kind = code == kConfigError ? "config" : code == kSolverError ? "solver"
                     : code == kInvariantError ? "invariant" : "internal";
    json rec{{"error", kind}, {"stage", stage_label}, {"message", e.what()}, {"exit_code", code}};
    if (const auto* iv = dynamic_cast<const InvariantViolation*>(&e)) rec["step"] = iv->step();
    try {
        fs::create_directories(out);
        std::ofstream f(out / "error.json");
        f << rec.dump(2) << "\n";
    } catch (...) {
    }
    return code;
}

void run(const ExperimentConfig& cfg) {
    if (cfg.command == "reproduce-paper") {
        const fs::path dir = cfg.scenario.empty() ? fs::path(CTMFLOW_SCENARIO_DIR) : cfg.scenario;
        reproduce_paper(cfg.out, dir, cfg.jobs);
        return;
    }
    const Scenario s = stage("load", [&] {
        Scenario sc = load_scenario(cfg.scenario.string());
        const auto report = validate(sc);
        if (!report.ok()) throw ConfigError(report.summary());
        return sc;
    });
    const CostSpec cost = parse_cost(cfg.cost);
    SimulationOptions sim;
    sim.model = parse_model(cfg.model);
    const ProgramKind kind = parse_kind(cfg.kind);
    if (cfg.epsilon < 0 || cfg.epsilon >= 1) throw ConfigError("epsilon must lie in [0, 1)");

    ArtifactSet art(cfg.out);
    json summary{{"command", cfg.command}, {"scenario_hash", hex64(scenario_hash(s))}};

    if (cfg.command == "simulate") {
        stage("simulate", [&] {
            const Trajectory tr = simulate(s, nullptr, sim);
            art.write("trajectory.csv", csv_of([&](std::ostream& o) { write_trajectory_csv(o, s.network, tr); }));
            summary["model"] = to_string(sim.model);
            summary["cost"] = evaluate_cost(s.network, tr, cost);
            summary["min_gamma"] = tr.min_gamma();
            summary["free_flow"] = tr.free_flow();
        });
    } else if (cfg.command == "solve") {
        stage("solve", [&] {
            const ConvexProgram P = build_program(s, cost, kind, cfg.epsilon);
            art.write("program.lp", to_lp_string(P));
            const Solution sol = solve_checked(P);
            std::ostringstream os;
            write_solution(os, P, sol);
            art.write("solution.txt", os.str());
            const Trajectory tr = trajectory_from_solution(P, sol, s.network);
            art.write("trajectory.csv", csv_of([&](std::ostream& o) { write_trajectory_csv(o, s.network, tr); }));
            summary["program"] = to_string(kind);
            summary["epsilon"] = cfg.epsilon;
            summary["solution"] = solution_json(sol);
        });
    } else if (cfg.command == "synthesize") {
        stage("synthesize", [&] {
            const ConvexProgram P = build_program(s, cost, kind, cfg.epsilon);
            const Solution sol = solve_checked(P);
            const ControlSchedule c = extract_controls(P, sol, s);
            const Trajectory ref = trajectory_from_solution(P, sol, s.network);
            const RealizationReport rep = verify_realization(c, s, ref, sim);
            art.write("alpha.csv", csv_of([&](std::ostream& o) { write_alpha_csv(o, s.network, c, s.horizon); }));
            art.write("routing.csv", csv_of([&](std::ostream& o) { write_routing_csv(o, s.network, c, s.horizon); }));
            art.write("trajectory.csv",
                      csv_of([&](std::ostream& o) { write_trajectory_csv(o, s.network, rep.simulated); }));
            summary["solution"] = solution_json(sol);
            summary["replay"] = {{"model", to_string(sim.model)},
                                 {"max_deviation", rep.max_deviation},
                                 {"tolerance", rep.tolerance},
                                 {"reproduces", rep.reproduces()},
                                 {"all_free_flow", rep.all_free_flow()},
                                 {"min_gamma", rep.min_gamma},
                                 {"identity_gap", rep.identity_gap},
                                 {"simulated_ttt", rep.simulated_cost}};
        });
    } else if (cfg.command == "robustness-sweep") {
        stage("robustness-sweep", [&] {
            RobustnessSetup setup;
            setup.simulation = sim;
            setup.controls = optimal_controls(s, kind, cost, cfg.epsilon);
            const auto deltas = cfg.deltas.empty() ? parse_grid("0:0.1:3") : cfg.deltas;
            const auto points = robustness_sweep(s, setup, deltas, cfg.jobs);
            art.write("sweep.csv", csv_of([&](std::ostream& o) { write_sweep_csv(o, points, cfg.model); }));
            if (s.network.sources().size() == 1) summary["lambda_hat"] = finite_or_string(max_freeflow_inflow(s, setup));
            summary["points"] = points.size();
        });
    } else {
        throw ConfigError("unknown command '" + cfg.command + "'");
    }
    art.write("summary.json", summary.dump(2) + "\n");
    art.write_manifest();
}

ReproduceSummary reproduce_paper(const fs::path& out, const fs::path& scenario_dir, int jobs) {
    ReproduceSummary result;
    ArtifactSet art(out);
    const Scenario bottleneck = stage("load", [&] { return load_scenario((scenario_dir / "fig5_bottleneck.json").string()); });
    const Scenario constant = stage("load", [&] { return load_scenario((scenario_dir / "fig5_constant.json").string()); });
    const Network& net = bottleneck.network;

    stage("tables2_3", [&] {
        std::ostringstream table;
        table << "method,cost,value,unit\n";
        const std::vector<int> cells{1, 2, 3, 4};
        for (const auto& [cost_name, cost] : {std::pair{"TTT", CostSpec::ttt()}, std::pair{"QUAD", CostSpec::quadratic()}}) {
            const std::string unit = cost.kind == CostKind::TTT ? "veh*step" : "veh^2*step";
            const Trajectory fifo = simulate(bottleneck);
            std::vector<std::pair<std::string, Trajectory>> runs{{"FIFO", fifo}};
            const double fifo_cost = evaluate_cost(net, fifo, cost);
            table << "FIFO," << cost_name << ',' << format_number(fifo_cost) << ',' << unit << '\n';
            result.table[std::string("FIFO,") + cost_name] = fifo_cost;
            for (ProgramKind kind : {ProgramKind::DTA, ProgramKind::FNC}) {
                const ConvexProgram P = build_program(bottleneck, cost, kind);
                const Solution sol = solve_checked(P);
                const std::string label = kind == ProgramKind::DTA ? "DTA" : "FNC";
                table << label << ',' << cost_name << ',' << format_number(sol.objective) << ',' << unit << '\n';
                result.table[label + "," + cost_name] = sol.objective;
                runs.emplace_back(label, trajectory_from_solution(P, sol, net));
            }
            art.write(cost.kind == CostKind::TTT ? "fig6_trajectories.csv" : "fig7_trajectories.csv",
                      trajectory_subset_csv(net, runs, cells));
        }
        art.write("tables2_3.csv", table.str());
    });

    stage("fig8_9", [&] {
        RobustnessSetup setup;
        setup.controls = optimal_controls(constant, ProgramKind::FNC, CostSpec::ttt(), 0.0);
        const auto deltas = parse_grid("0:0.1:3");
        for (const auto& [model, file] : {std::pair{JunctionModel::FifoProportional, "fig8_sweep_fifo.csv"},
                                          std::pair{JunctionModel::NonFifo, "fig9_sweep_nonfifo.csv"}}) {
            setup.simulation.model = model;
            const auto points = robustness_sweep(constant, setup, deltas, jobs);
            const std::string label = model == JunctionModel::NonFifo ? "nonfifo" : "fifo";
            art.write(file, csv_of([&](std::ostream& o) { write_sweep_csv(o, points, label); }));
            const double lh = max_freeflow_inflow(constant, setup);
            (model == JunctionModel::NonFifo ? result.lambda_hat_nonfifo : result.lambda_hat_fifo) = lh;
        }
    });

    stage("fig10", [&] {
        std::ostringstream os;
        os << "epsilon,delta_lambda_veh_per_step,cost_veh_steps,gamma\n";
        const auto deltas = parse_grid("0:0.1:3");
        for (int k = 0; k <= 5; ++k) {
            const double eps = 0.1 * k;
            const ControlSchedule c = optimal_controls(bottleneck, ProgramKind::FNC, CostSpec::ttt(), eps);
            for (double d : deltas) {
                const Trajectory tr = simulate(apply(bottleneck, shift_inflow(bottleneck, d)), &c);
                os << format_number(eps) << ',' << format_number(d) << ','
                   << format_number(evaluate_cost(net, tr, CostSpec::ttt())) << ',' << format_number(tr.min_gamma())
                   << '\n';
            }
        }
        art.write("fig10_tradeoff.csv", os.str());
    });

    json summary{{"tables", result.table},
                 {"lambda_hat_fifo", finite_or_string(result.lambda_hat_fifo)},
                 {"lambda_hat_nonfifo", finite_or_string(result.lambda_hat_nonfifo)},
                 {"nominal_inflow", constant.lambda(0, constant.network.sources().front())}};
    art.write("summary.json", summary.dump(2) + "\n");
    art.write_manifest();
    for (const auto& [name, h] : art.hashes()) result.artifacts.push_back(name);
    return result;
}

}  // namespace ctmflow::tools
