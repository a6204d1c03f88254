#include "ctmflow/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "ctm_kernel.hpp"
#include "ctmflow/errors.hpp"

namespace ctmflow {

namespace {

const ProgramLayout& layout_of(const ConvexProgram& P) {
    if (!P.layout) throw ConfigError("program has no CTM layout");
    return *P.layout;
}

void check_shape(const ConvexProgram& P, const Solution& s, const Network& net) {
    const ProgramLayout& L = layout_of(P);
    if (static_cast<int>(s.values.size()) != P.variable_count())
        throw ConfigError("solution size does not match the program");
    if (L.cells != net.size() || L.pairs != net.pair_count())
        throw ConfigError("program layout does not match the network");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double outflow_gap(const Scenario& scenario, const ConvexProgram& P, const Solution& s, int& checked) {
    const Network& net = scenario.network;
    const ProgramLayout& L = *P.layout;
    const RoutingSchedule R = detail::default_routing(scenario);
    const Trajectory opt = trajectory_from_solution(P, s, net);
    const double scale = 1.0 - L.epsilon;
    double gap = 0.0;
    checked = 0;
    for (const Junction& j : classify_junctions(net)) {
        if (j.kind != JunctionKind::Ordinary && j.kind != JunctionKind::Diverge) continue;
        const int i = j.in.front();
        for (int t = 0; t < L.horizon; ++t) {
            const auto& x = opt.x[t];
            double bound = demand(net.cell(i), std::max(0.0, x[i]), 1.0, t);
            for (int p : net.out_pairs(i)) {
                const double r = R.at(t)[p];
                if (r <= 0) continue;
                const int k = net.pair(p).to;
                const double xk = std::min(std::max(0.0, x[k]), net.cell(k).diagram.jam_volume);
                bound = std::min(bound, scale * supply(net.cell(k), xk, t) / r);
            }
            gap = std::max(gap, std::abs(opt.rates[t].z[i] - bound));
            ++checked;
        }
    }
    return gap;
}

// Among solutions within 1e-9 (relative) of `optimum`, maximize sum_t (T - t + 1) sum_i z_i(t).
Solution early_outflow_optimum(const ConvexProgram& P, double optimum) {
    const ProgramLayout& L = *P.layout;
    ConvexProgram face = P;
    std::vector<std::pair<int, double>> cost_row;
    for (int j = 0; j < P.variable_count(); ++j)
        if (P.linear[j] != 0.0) cost_row.emplace_back(j, P.linear[j]);
    face.add_row(std::move(cost_row), RowSense::LessEqual, optimum + 1e-9 * (1.0 + std::abs(optimum)),
                 "optimal_face");
    std::fill(face.linear.begin(), face.linear.end(), 0.0);
    for (int t = 0; t < L.horizon; ++t)
        for (int i = 0; i < L.cells; ++i) face.linear[L.z(t, i)] = -static_cast<double>(L.horizon - t + 1);
    return solve_lp(face);
}

}  // namespace

Trajectory trajectory_from_solution(const ConvexProgram& P, const Solution& s, const Network& net) {
    check_shape(P, s, net);
    const ProgramLayout& L = *P.layout;
    const int n = net.size(), T = L.horizon;
    const auto& v = s.values;
    Trajectory traj;
    traj.x.assign(T + 1, std::vector<double>(n));
    traj.rates.resize(T);
    for (int t = 0; t <= T; ++t)
        for (int i = 0; i < n; ++i) traj.x[t][i] = v[L.x(t, i)];
    for (int t = 0; t < T; ++t) {
        FlowRates& r = traj.rates[t];
        r.y.assign(n, 0.0);
        r.z.assign(n, 0.0);
        r.mu.assign(n, 0.0);
        r.gamma.assign(n, 1.0);
        r.f.assign(net.pair_count(), 0.0);
        for (int i = 0; i < n; ++i) {
            r.y[i] = v[L.y(t, i)];
            r.z[i] = v[L.z(t, i)];
            if (net.is_sink(i)) r.mu[i] = v[L.mu(t, i)];
        }
        for (int p = 0; p < net.pair_count(); ++p) r.f[p] = v[L.f(t, p)];
    }
    return traj;
}

ControlSchedule extract_controls(const ConvexProgram& P, const Solution& s, const Scenario& scenario, double tol) {
    const Network& net = scenario.network;
    check_shape(P, s, net);
    const ProgramLayout& L = *P.layout;
    const int n = net.size(), T = L.horizon;
    const auto& v = s.values;

    ControlSchedule c;
    c.alpha.assign(T, std::vector<double>(n, 1.0));
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const auto& d = net.cell(i).diagram;
            const double z = std::max(0.0, v[L.z(t, i)]);
            const double x = std::max(0.0, v[L.x(t, i)]);
            if (net.is_source(i)) {
                const double C = d.capacity(t);
                if (C > 0) c.alpha[t][i] = clamp01(z / C);
                else if (z > tol)
                    throw ConfigError("extract_controls: outflow from a zero-capacity source at step " +
                                      std::to_string(t));
                continue;
            }
            const double dem = d.free_demand(x);
            if (dem > 0) {
                c.alpha[t][i] = clamp01(z / dem);
            } else if (z > tol) {
                throw ConfigError("extract_controls: outflow " + std::to_string(z) + " with zero demand at cell " +
                                  std::to_string(net.cell(i).id) + ", step " + std::to_string(t));
            }
        }
    }

    if (L.kind == ProgramKind::FNC) {
        c.routing = detail::default_routing(scenario);
        return c;
    }
    // Ratios below 1e-9 are solver noise; under FIFO they would still couple the cell to a
    // blocked successor, so they are dropped before normalizing.
    c.routing.steps.assign(T, std::vector<double>(net.pair_count(), 0.0));
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const auto& outs = net.out_pairs(i);
            if (outs.empty()) continue;
            double total = 0.0;
            for (int p : outs) total += std::max(0.0, v[L.f(t, p)]);
            if (total <= 1e-12) {
                for (int p : outs) c.routing.steps[t][p] = 1.0 / static_cast<double>(outs.size());
                continue;
            }
            double kept = 0.0;
            for (int p : outs) {
                const double r = std::max(0.0, v[L.f(t, p)]) / total;
                c.routing.steps[t][p] = r < 1e-9 ? 0.0 : r;
                kept += c.routing.steps[t][p];
            }
            for (int p : outs) c.routing.steps[t][p] /= kept;
        }
    }
    return c;
}

bool RealizationReport::all_free_flow() const {
    return std::all_of(free_flow.begin(), free_flow.end(), [](bool b) { return b; });
}

RealizationReport verify_realization(const ControlSchedule& controls, const Scenario& scenario,
                                     const Trajectory& reference, const SimulationOptions& options) {
    const Network& net = scenario.network;
    RealizationReport rep;
    rep.simulated = simulate(scenario, &controls, options);
    double xmax = 0.0;
    for (const auto& row : reference.x)
        for (double v : row) xmax = std::max(xmax, std::abs(v));
    rep.tolerance = 1e-6 * (1.0 + xmax);
    const std::size_t steps = std::min(reference.x.size(), rep.simulated.x.size());
    for (std::size_t t = 0; t < steps; ++t)
        for (int i = 0; i < net.size(); ++i)
            rep.max_deviation = std::max(rep.max_deviation, std::abs(rep.simulated.x[t][i] - reference.x[t][i]));
    if (reference.x.size() != rep.simulated.x.size()) rep.max_deviation = kInf;

    rep.free_flow.assign(rep.simulated.rates.size(), true);
    for (std::size_t t = 0; t < rep.simulated.rates.size(); ++t)
        for (double g : rep.simulated.rates[t].gamma) {
            rep.min_gamma = std::min(rep.min_gamma, g);
            if (g < 1.0 - 1e-9) rep.free_flow[t] = false;
        }

    for (int t = 0; t < reference.horizon(); ++t) {
        const auto& alpha = controls.alpha_at(t);
        for (int i = 0; i < net.size(); ++i) {
            const double x = std::max(0.0, reference.x[t][i]);
            const double dbar = demand(net.cell(i), x, alpha[i], t);
            rep.identity_gap = std::max(rep.identity_gap, std::abs(reference.rates[t].z[i] - dbar));
        }
    }
    rep.simulated_cost = evaluate_cost(net, rep.simulated, CostSpec::ttt());
    return rep;
}

bool StructureReport::costs_match(double rel) const {
    return applicable && std::abs(fnc_cost - fifo_cost) <= rel * std::max(std::abs(fifo_cost), 1e-12);
}

StructureReport check_fnc_structure(const Scenario& scenario, const ConvexProgram& P, const Solution& s,
                                    const CostSpec& cost) {
    StructureReport rep;
    const Network& net = scenario.network;
    const ProgramLayout& L = layout_of(P);
    if (L.kind != ProgramKind::FNC) {
        rep.reason = "program is not an FNC relaxation";
        return rep;
    }
    if (cost.kind != CostKind::TTT) {
        rep.reason = "cost is not total travel time";
        return rep;
    }
    const double slope = net.cell(0).diagram.demand_slope;
    for (const Cell& c : net.cells())
        if (std::abs(c.diagram.demand_slope - slope) > 1e-12 * std::max(1.0, slope)) {
            rep.reason = "demand slopes differ across cells";
            return rep;
        }
    if (!s.optimal()) {
        rep.reason = std::string("solution status is ") + to_string(s.status);
        return rep;
    }
    rep.applicable = true;
    rep.fnc_cost = s.objective;
    rep.fifo_cost = evaluate_cost(net, simulate(scenario), cost);

    rep.solver_vertex_gap = outflow_gap(scenario, P, s, rep.checked);
    rep.max_outflow_gap = rep.solver_vertex_gap;
    if (rep.solver_vertex_gap > 1e-6) {
        const Solution face = early_outflow_optimum(P, s.objective);
        if (face.optimal()) {
            int checked = 0;
            rep.max_outflow_gap = outflow_gap(scenario, P, face, checked);
            rep.tie_broken = true;
        }
    }
    return rep;
}

}  // namespace ctmflow
