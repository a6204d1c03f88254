#pragma once

#include <vector>

#include "ctmflow/ctm.hpp"

namespace ctmflow {

enum class CostKind { TTT, TTD, Delay, QuadraticVolume, WeightedSum };

const char* to_string(CostKind k);

struct CostTerm {
    CostKind kind = CostKind::TTT;
    double weight = 1.0;
};

/// psi_i(x, z) summed over cells and steps t = 0..T (z(T) taken as 0).
struct CostSpec {
    CostKind kind = CostKind::TTT;
    std::vector<double> cell_weights;  ///< empty means all ones
    std::vector<CostTerm> terms;       ///< WeightedSum only

    static CostSpec ttt() { return {CostKind::TTT, {}, {}}; }
    static CostSpec quadratic() { return {CostKind::QuadraticVolume, {}, {}}; }
};

/// psi_i(x, z) = linear_x[i]*x + quadratic_x[i]*x^2 + linear_z[i]*z.
struct CostCoefficients {
    std::vector<double> linear_x;
    std::vector<double> quadratic_x;
    std::vector<double> linear_z;

    bool quadratic() const;
    double psi(int i, double x, double z) const {
        return linear_x[i] * x + quadratic_x[i] * x * x + linear_z[i] * z;
    }
};

/// TTT: x. TTD: -L*z (negated distance). Delay: x - z/d'. Quadratic: x^2.
/// Throws ConfigError on negative weights or nested WeightedSum.
CostCoefficients cost_coefficients(const Network& net, const CostSpec& spec);

double evaluate_cost(const Network& net, const Trajectory& traj, const CostSpec& spec);

}  // namespace ctmflow
