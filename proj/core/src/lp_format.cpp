#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "ctmflow/errors.hpp"
#include "ctmflow/program.hpp"
#include "ctmflow/solver.hpp"

namespace ctmflow {

namespace {

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Writes " + a x" terms, wrapping long lines.
void terms(std::ostream& out, const std::vector<std::pair<int, double>>& t, const ConvexProgram& P) {
    int col = 0;
    bool first = true;
    for (const auto& [j, a] : t) {
        if (a == 0.0) continue;
        out << (a < 0 ? " - " : (first ? " " : " + ")) << num(std::abs(a)) << ' ' << P.names[j];
        first = false;
        if (++col % 8 == 0) out << "\n   ";
    }
    if (first) out << " 0 " << (P.names.empty() ? "x" : P.names[0]);
}

}  // namespace

void write_lp(std::ostream& out, const ConvexProgram& P) {
    out << "\\ ctmflow program";
    if (P.layout)
        out << " kind=" << to_string(P.layout->kind) << " epsilon=" << num(P.layout->epsilon)
            << " scenario=" << std::hex << P.layout->scenario_hash << std::dec;
    out << "\nMinimize\n obj:";
    std::vector<std::pair<int, double>> lin;
    for (int j = 0; j < P.variable_count(); ++j)
        if (P.linear[j] != 0.0) lin.emplace_back(j, P.linear[j]);
    terms(out, lin, P);
    if (P.is_quadratic()) {
        out << "\n + [";
        bool first = true;
        int col = 0;
        for (int j = 0; j < P.variable_count(); ++j) {
            if (P.quadratic[j] == 0.0) continue;
            out << (first ? " " : " + ") << num(2.0 * P.quadratic[j]) << ' ' << P.names[j] << " ^2";
            first = false;
            if (++col % 6 == 0) out << "\n   ";
        }
        out << " ] / 2";
    }
    out << "\nSubject To\n";
    for (int r = 0; r < P.row_count(); ++r) {
        const Row& row = P.rows[r];
        out << " r" << r << ':';
        terms(out, row.terms, P);
        out << (row.sense == RowSense::Equal ? " = " : " <= ") << num(row.rhs) << '\n';
    }
    out << "Bounds\n";
    for (int j = 0; j < P.variable_count(); ++j) {
        const double lo = P.lower[j], hi = P.upper[j];
        if (lo == 0.0 && std::isinf(hi) && hi > 0) continue;
        if (lo == hi) out << ' ' << P.names[j] << " = " << num(lo) << '\n';
        else if (std::isinf(lo) && std::isinf(hi)) out << ' ' << P.names[j] << " free\n";
        else out << ' ' << num(lo) << " <= " << P.names[j] << " <= " << num(hi) << '\n';
    }
    out << "End\n";
}

std::string to_lp_string(const ConvexProgram& P) {
    std::ostringstream os;
    write_lp(os, P);
    return os.str();
}

void write_solution(std::ostream& out, const ConvexProgram& P, const Solution& s) {
    out << "# status " << to_string(s.status) << "\n# objective " << num(s.objective) << '\n';
    for (int j = 0; j < P.variable_count(); ++j) out << P.names[j] << ' ' << num(s.values[j]) << '\n';
}

Solution read_solution(std::istream& in, const ConvexProgram& P) {
    std::unordered_map<std::string, int> index;
    for (int j = 0; j < P.variable_count(); ++j) index.emplace(P.names[j], j);
    Solution s;
    s.values.assign(P.variable_count(), 0.0);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name) || name[0] == '#' || name[0] == '\\') continue;
        double v;
        if (!(ls >> v)) throw ConfigError("solution line " + std::to_string(lineno) + ": missing value");
        auto it = index.find(name);
        if (it == index.end()) throw ConfigError("solution line " + std::to_string(lineno) + ": unknown variable " + name);
        s.values[it->second] = v;
    }
    s.objective = P.objective(s.values);
    s.residuals.primal = P.primal_residual(s.values);
    s.status = s.residuals.primal <= 1e-6 ? SolveStatus::Optimal : SolveStatus::Infeasible;
    s.method = "import";
    return s;
}

}  // namespace ctmflow
