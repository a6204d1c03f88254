#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ctmflow/program.hpp"

namespace ctmflow {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(SolveStatus s);

struct Residuals {
    double primal = 0.0;           ///< infinity-norm, against the program's rows and bounds
    double dual = 0.0;             ///< infinity-norm of dual infeasibility
    double complementarity = 0.0;
};

struct Solution {
    std::vector<double> values;
    double objective = 0.0;
    SolveStatus status = SolveStatus::IterationLimit;
    Residuals residuals;
    std::vector<double> duals;    ///< row multipliers (LP), empty otherwise
    double dual_objective = 0.0;  ///< LP: reconstructed from the final basis
    std::vector<double> farkas;   ///< row multipliers proving infeasibility (LP)
    long iterations = 0;
    std::string method;

    bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SimplexOptions {
    long max_iterations = 500000;
    int bland_after = 1000;        ///< consecutive degenerate pivots before Bland's rule
    int refactor_every = 100;
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
};

struct AdmmOptions {
    long max_iterations = 200000;
    double tolerance = 1e-6;
    double over_relaxation = 1.6;
    double sigma = 1e-6;
    int check_every = 10;
    bool polish = true;
    bool rebalance_rho = true;     ///< rescale the step at iterations 1000, 2000, 4000, ... when the residuals are unbalanced
};

/// Bounded-variable revised simplex (LP objectives only).
Solution solve_lp(const ConvexProgram& program, const SimplexOptions& options = {});

/// Over-relaxed operator splitting for convex QPs (also accepts LPs).
Solution solve_qp(const ConvexProgram& program, const AdmmOptions& options = {});

/// Dispatch on objective type.
Solution solve(const ConvexProgram& program);

/// Exhaustive oracle for tiny programs. Equalities are eliminated, then every subset of
/// inequalities (exactly `free dims` of them for LPs, at most that many for QPs) is made active
/// and the resulting equality-constrained problem solved; the best feasible candidate wins.
/// ConfigError when more than `max_free_dims` free dimensions remain or the subset count
/// exceeds `max_subsets`. Assumes a bounded optimum when the program is feasible.
Solution brute_force_oracle(const ConvexProgram& program, int max_free_dims = 12,
                            long max_subsets = 5000000);

/// min over the bound box of (sum_r pi_r a_r)^T v minus pi^T b; positive proves infeasibility
/// (pi_r >= 0 required on LessEqual rows).
double farkas_gap(const ConvexProgram& program, const std::vector<double>& pi);

/// Read "name value" lines (comments with '#' or '\\') into a Solution checked against the program.
Solution read_solution(std::istream& in, const ConvexProgram& program);
void write_solution(std::ostream& out, const ConvexProgram& program, const Solution& solution);

}  // namespace ctmflow
