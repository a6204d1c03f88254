#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctmflow/cost.hpp"
#include "ctmflow/network.hpp"

namespace ctmflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { Equal, LessEqual };

struct Row {
    std::vector<std::pair<int, double>> terms;  ///< (variable, coefficient)
    RowSense sense = RowSense::Equal;
    double rhs = 0.0;
    std::string label;
};

enum class ProgramKind { DTA, FNC };

const char* to_string(ProgramKind k);

/// Where the CTM variables live inside a program built from a scenario.
struct ProgramLayout {
    ProgramKind kind = ProgramKind::DTA;
    double epsilon = 0.0;
    std::uint64_t scenario_hash = 0;
    int horizon = 0;
    int cells = 0;
    int pairs = 0;
    std::vector<int> sink_rank;  ///< cell -> position among sinks, -1 otherwise

    int x(int t, int i) const { return t * cells + i; }
    int y(int t, int i) const { return y_offset + t * cells + i; }
    int z(int t, int i) const { return z_offset + t * cells + i; }
    int f(int t, int p) const { return f_offset + t * pairs + p; }
    int mu(int t, int i) const { return mu_offset + t * sinks + sink_rank[i]; }

    int sinks = 0;
    int y_offset = 0;
    int z_offset = 0;
    int f_offset = 0;
    int mu_offset = 0;
};

/// min  sum_j c_j v_j + q_j v_j^2  s.t. rows, lower <= v <= upper.
struct ConvexProgram {
    std::vector<std::string> names;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> linear;
    std::vector<double> quadratic;  ///< diagonal, q_j >= 0
    std::vector<Row> rows;
    std::optional<ProgramLayout> layout;

    int variable_count() const { return static_cast<int>(names.size()); }
    int row_count() const { return static_cast<int>(rows.size()); }

    int add_variable(std::string name, double lo = 0.0, double hi = kInf, double c = 0.0, double q = 0.0);
    int add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs, std::string label = {});

    bool is_quadratic() const;
    double objective(const std::vector<double>& v) const;
    /// Row activity a^T v.
    double activity(int r, const std::vector<double>& v) const;
    /// max violation over rows and bounds (infinity-norm).
    double primal_residual(const std::vector<double>& v) const;
};

/// Discretized DTA relaxation. Supply rows are scaled by (1 - eps).
ConvexProgram build_dta(const Scenario& scenario, const CostSpec& cost, double epsilon = 0.0);

/// DTA relaxation plus f_ij = R_ij(t) z_i. ConfigError when the scenario has no routing.
ConvexProgram build_fnc(const Scenario& scenario, const CostSpec& cost, double epsilon = 0.0);

ConvexProgram build_program(const Scenario& scenario, const CostSpec& cost, ProgramKind kind,
                            double epsilon = 0.0);

/// Variable vector of a simulated trajectory in the program's layout (feasibility checks).
std::vector<double> embed_trajectory(const ConvexProgram& program, const Network& net,
                                     const struct Trajectory& traj);

/// CPLEX-style LP text: Minimize / Subject To / Bounds / End. Quadratic terms use [ ... ] / 2.
void write_lp(std::ostream& out, const ConvexProgram& program);
std::string to_lp_string(const ConvexProgram& program);

}  // namespace ctmflow
