#include "ctmflow/solver.hpp"

namespace ctmflow {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

Solution solve(const ConvexProgram& program) {
    return program.is_quadratic() ? solve_qp(program) : solve_lp(program);
}

}  // namespace ctmflow
