#pragma once

#include <string>
#include <vector>

#include "ctmflow/ctm.hpp"
#include "ctmflow/solver.hpp"

namespace ctmflow {

/// Trajectory (x, y, z, f, mu) read out of a program solution; gamma is set to 1.
Trajectory trajectory_from_solution(const ConvexProgram& program, const Solution& solution,
                                    const Network& net);

/// alpha = z/d(x) on non-sources (1 when z = d = 0), z/C on sources, clamped to [0,1].
/// DTA: R = f/z (uniform over successors when z = 0). FNC: the scenario routing.
/// Throws ConfigError when d(x) = 0 but z exceeds `tol`.
ControlSchedule extract_controls(const ConvexProgram& program, const Solution& solution,
                                 const Scenario& scenario, double tol = 1e-7);

struct RealizationReport {
    double max_deviation = 0.0;     ///< max |x_sim - x_ref|
    double tolerance = 0.0;         ///< 1e-6 * (1 + ||x_ref||_inf)
    std::vector<bool> free_flow;    ///< per step, all gamma within 1e-9 of 1
    double min_gamma = 1.0;
    double identity_gap = 0.0;      ///< max |z_ref - dbar(x_ref, alpha)|
    double simulated_cost = 0.0;    ///< TTT of the replay
    Trajectory simulated;

    bool reproduces() const { return max_deviation <= tolerance; }
    bool all_free_flow() const;
    bool identity_holds(double tol = 1e-6) const { return identity_gap <= tol; }
};

RealizationReport verify_realization(const ControlSchedule& controls, const Scenario& scenario,
                                     const Trajectory& reference, const SimulationOptions& options = {});

struct StructureReport {
    bool applicable = false;
    std::string reason;              ///< why the check was refused
    double fnc_cost = 0.0;
    double fifo_cost = 0.0;
    double max_outflow_gap = 0.0;    ///< max |z_i - min{d_i, C_i, s_j/R_ij}| over checked cells
    double solver_vertex_gap = 0.0;  ///< the same gap on the solution as passed in
    bool tie_broken = false;         ///< gap measured on the early-outflow optimum instead
    int checked = 0;                 ///< (cell, step) pairs checked

    bool costs_match(double rel = 1e-3) const;
};

/// Structural check of the FNC optimum for linear identical-slope demands and TTT cost:
/// outflows upstream of ordinary/diverge junctions are maximal, and the optimum equals
/// the uncontrolled FIFO cost. TTT optima are usually degenerate (holding vehicles upstream
/// can be cost-neutral), so when the given vertex shows a gap the check re-solves over the
/// optimal face, maximizing time-weighted outflow, and reports that optimum's gap.
StructureReport check_fnc_structure(const Scenario& scenario, const ConvexProgram& program,
                                    const Solution& solution, const CostSpec& cost);

}  // namespace ctmflow
