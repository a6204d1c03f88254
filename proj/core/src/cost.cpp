#include "ctmflow/cost.hpp"

#include "ctmflow/errors.hpp"

namespace ctmflow {

const char* to_string(CostKind k) {
    switch (k) {
        case CostKind::TTT: return "ttt";
        case CostKind::TTD: return "ttd";
        case CostKind::Delay: return "delay";
        case CostKind::QuadraticVolume: return "quad";
        case CostKind::WeightedSum: return "weighted";
    }
    return "?";
}

bool CostCoefficients::quadratic() const {
    for (double q : quadratic_x)
        if (q != 0.0) return true;
    return false;
}

namespace {

void accumulate(const Network& net, CostKind kind, double scale, const std::vector<double>& w,
                CostCoefficients& c) {
    for (int i = 0; i < net.size(); ++i) {
        const double wi = scale * (w.empty() ? 1.0 : w[i]);
        const Cell& cell = net.cell(i);
        switch (kind) {
            case CostKind::TTT: c.linear_x[i] += wi; break;
            case CostKind::TTD: c.linear_z[i] -= wi * cell.L; break;
            case CostKind::Delay:
                c.linear_x[i] += wi;
                if (cell.diagram.demand_slope > 0) c.linear_z[i] -= wi / cell.diagram.demand_slope;
                break;
            case CostKind::QuadraticVolume: c.quadratic_x[i] += wi; break;
            case CostKind::WeightedSum: throw ConfigError("nested weighted-sum cost");
        }
    }
}

}  // namespace

CostCoefficients cost_coefficients(const Network& net, const CostSpec& spec) {
    const int n = net.size();
    if (!spec.cell_weights.empty() && static_cast<int>(spec.cell_weights.size()) != n)
        throw ConfigError("cost: cell weight count does not match the network");
    for (double w : spec.cell_weights)
        if (!(w >= 0)) throw ConfigError("cost: negative cell weight");
    CostCoefficients c{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    if (spec.kind == CostKind::WeightedSum) {
        if (spec.terms.empty()) throw ConfigError("cost: weighted sum without terms");
        for (const auto& term : spec.terms) {
            if (!(term.weight >= 0)) throw ConfigError("cost: negative term weight");
            accumulate(net, term.kind, term.weight, spec.cell_weights, c);
        }
    } else {
        accumulate(net, spec.kind, 1.0, spec.cell_weights, c);
    }
    return c;
}

double evaluate_cost(const Network& net, const Trajectory& traj, const CostSpec& spec) {
    const auto c = cost_coefficients(net, spec);
    double total = 0.0;
    for (std::size_t t = 0; t < traj.x.size(); ++t) {
        for (int i = 0; i < net.size(); ++i) {
            const double z = t < traj.rates.size() ? traj.rates[t].z[i] : 0.0;
            total += c.psi(i, traj.x[t][i], z);
        }
    }
    return total;
}

}  // namespace ctmflow
