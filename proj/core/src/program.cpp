#include "ctmflow/program.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctmflow/ctm.hpp"
#include "ctmflow/errors.hpp"

namespace ctmflow {

const char* to_string(ProgramKind k) { return k == ProgramKind::DTA ? "dta" : "fnc"; }

int ConvexProgram::add_variable(std::string name, double lo, double hi, double c, double q) {
    names.push_back(std::move(name));
    lower.push_back(lo);
    upper.push_back(hi);
    linear.push_back(c);
    quadratic.push_back(q);
    return variable_count() - 1;
}

int ConvexProgram::add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs, std::string label) {
    for (const auto& [j, a] : terms)
        if (j < 0 || j >= variable_count())
            throw ConfigError("row '" + label + "' references undeclared variable " + std::to_string(j));
    std::sort(terms.begin(), terms.end());
    // merge duplicates, drop zeros
    std::vector<std::pair<int, double>> merged;
    for (const auto& [j, a] : terms) {
        if (!merged.empty() && merged.back().first == j) merged.back().second += a;
        else merged.emplace_back(j, a);
    }
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    rows.push_back({std::move(merged), sense, rhs, std::move(label)});
    return row_count() - 1;
}

bool ConvexProgram::is_quadratic() const {
    return std::any_of(quadratic.begin(), quadratic.end(), [](double q) { return q != 0.0; });
}

double ConvexProgram::objective(const std::vector<double>& v) const {
    double s = 0.0;
    for (int j = 0; j < variable_count(); ++j) s += linear[j] * v[j] + quadratic[j] * v[j] * v[j];
    return s;
}

double ConvexProgram::activity(int r, const std::vector<double>& v) const {
    double s = 0.0;
    for (const auto& [j, a] : rows[r].terms) s += a * v[j];
    return s;
}

double ConvexProgram::primal_residual(const std::vector<double>& v) const {
    double res = 0.0;
    for (int r = 0; r < row_count(); ++r) {
        const double d = activity(r, v) - rows[r].rhs;
        res = std::max(res, rows[r].sense == RowSense::Equal ? std::abs(d) : std::max(0.0, d));
    }
    for (int j = 0; j < variable_count(); ++j) {
        res = std::max(res, lower[j] - v[j]);
        res = std::max(res, v[j] - upper[j]);
    }
    return res;
}

namespace {

std::string tag(const char* family, int t, int id) {
    return std::string(family) + "[" + std::to_string(t) + "," + std::to_string(id) + "]";
}

}  // namespace

ConvexProgram build_program(const Scenario& s, const CostSpec& cost, ProgramKind kind, double eps) {
    if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in [0, 1)");
    const Network& net = s.network;
    if (kind == ProgramKind::FNC && !s.routing) throw ConfigError("FNC program needs an exogenous routing schedule");
    const int n = net.size();
    const int np = net.pair_count();
    const int T = s.horizon;
    if (T < 1) throw ConfigError("horizon must be at least 1");
    if (static_cast<int>(s.x0.size()) != n) throw ConfigError("x0 does not match the network");
    const auto coef = cost_coefficients(net, cost);

    ConvexProgram P;
    ProgramLayout L;
    L.kind = kind;
    L.epsilon = eps;
    L.scenario_hash = scenario_hash(s);
    L.horizon = T;
    L.cells = n;
    L.pairs = np;
    L.sink_rank.assign(n, -1);
    for (int i : net.sinks()) L.sink_rank[i] = L.sinks++;

    auto id = [&](int i) { return std::to_string(net.cell(i).id); };
    for (int t = 0; t <= T; ++t)
        for (int i = 0; i < n; ++i)
            P.add_variable("x_" + std::to_string(t) + "_" + id(i), 0.0, kInf, coef.linear_x[i], coef.quadratic_x[i]);
    L.y_offset = P.variable_count();
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i) P.add_variable("y_" + std::to_string(t) + "_" + id(i));
    L.z_offset = P.variable_count();
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i) P.add_variable("z_" + std::to_string(t) + "_" + id(i), 0.0, kInf, coef.linear_z[i]);
    L.f_offset = P.variable_count();
    for (int t = 0; t < T; ++t)
        for (int p = 0; p < np; ++p)
            P.add_variable("f_" + std::to_string(t) + "_" + id(net.pair(p).from) + "_" + id(net.pair(p).to));
    L.mu_offset = P.variable_count();
    for (int t = 0; t < T; ++t)
        for (int i : net.sinks()) P.add_variable("mu_" + std::to_string(t) + "_" + id(i));

    for (int i = 0; i < n; ++i) P.add_row({{L.x(0, i), 1.0}}, RowSense::Equal, s.x0[i], tag("init", 0, net.cell(i).id));

    const RoutingSchedule* R = kind == ProgramKind::FNC ? &*s.routing : nullptr;
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const Cell& c = net.cell(i);
            const auto& d = c.diagram;
            P.add_row({{L.x(t + 1, i), 1.0}, {L.x(t, i), -1.0}, {L.y(t, i), -1.0}, {L.z(t, i), 1.0}},
                      RowSense::Equal, 0.0, tag("dyn", t, c.id));

            std::vector<std::pair<int, double>> in{{L.y(t, i), 1.0}};
            for (int p : net.in_pairs(i)) in.emplace_back(L.f(t, p), -1.0);
            P.add_row(std::move(in), RowSense::Equal, s.lambda(t, i), tag("inflow", t, c.id));

            std::vector<std::pair<int, double>> out{{L.z(t, i), 1.0}};
            for (int p : net.out_pairs(i)) out.emplace_back(L.f(t, p), -1.0);
            if (net.is_sink(i)) out.emplace_back(L.mu(t, i), -1.0);
            P.add_row(std::move(out), RowSense::Equal, 0.0, tag("outflow", t, c.id));

            P.add_row({{L.z(t, i), 1.0}, {L.x(t, i), -d.demand_slope}}, RowSense::LessEqual, 0.0,
                      tag("demand", t, c.id));
            P.add_row({{L.z(t, i), 1.0}}, RowSense::LessEqual, d.capacity(t), tag("demand_cap", t, c.id));

            if (!net.is_source(i)) {
                const double k = (1.0 - eps);
                P.add_row({{L.y(t, i), 1.0}, {L.x(t, i), k * d.supply_slope}}, RowSense::LessEqual,
                          k * d.supply_slope * d.jam_volume, tag("supply", t, c.id));
                P.add_row({{L.y(t, i), 1.0}}, RowSense::LessEqual, k * d.capacity(t), tag("supply_cap", t, c.id));
            }
        }
        if (R) {
            const auto& r = R->at(t);
            for (int p = 0; p < np; ++p)
                P.add_row({{L.f(t, p), 1.0}, {L.z(t, net.pair(p).from), -r[p]}}, RowSense::Equal, 0.0,
                          tag("route", t, p));
        }
    }
    P.layout = L;
    return P;
}

ConvexProgram build_dta(const Scenario& s, const CostSpec& cost, double eps) {
    return build_program(s, cost, ProgramKind::DTA, eps);
}

ConvexProgram build_fnc(const Scenario& s, const CostSpec& cost, double eps) {
    return build_program(s, cost, ProgramKind::FNC, eps);
}

std::vector<double> embed_trajectory(const ConvexProgram& P, const Network& net, const Trajectory& traj) {
    if (!P.layout) throw ConfigError("program has no CTM layout");
    const auto& L = *P.layout;
    if (traj.horizon() != L.horizon) throw ConfigError("trajectory horizon does not match the program");
    std::vector<double> v(P.variable_count(), 0.0);
    for (int t = 0; t <= L.horizon; ++t)
        for (int i = 0; i < L.cells; ++i) v[L.x(t, i)] = traj.x[t][i];
    for (int t = 0; t < L.horizon; ++t) {
        const auto& r = traj.rates[t];
        for (int i = 0; i < L.cells; ++i) {
            v[L.y(t, i)] = r.y[i];
            v[L.z(t, i)] = r.z[i];
            if (net.is_sink(i)) v[L.mu(t, i)] = r.mu[i];
        }
        for (int p = 0; p < L.pairs; ++p) v[L.f(t, p)] = r.f[p];
    }
    return v;
}

}  // namespace ctmflow
