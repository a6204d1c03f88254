#pragma once

#include <vector>

#include "ctmflow/ctm.hpp"

namespace ctmflow::detail {

/// Scratch buffers reused across steps.
struct RateWorkspace {
    std::vector<double> dbar;
    std::vector<double> incoming;
    std::vector<double> ratio;
};

void compute_rates_into(const Network& net, const double* x, const double* alpha, const double* R,
                        const double* lambda, int t, const SimulationOptions& options,
                        RateWorkspace& ws, FlowRates& out);

/// x+ = x + y - z in place of `next`; returns false (and leaves a message) on a box violation.
void step_into(const Network& net, const std::vector<double>& x, const FlowRates& rates,
               std::vector<double>& next, int t);

/// Scenario routing, or ratio 1 on single-successor cells when the scenario has none.
RoutingSchedule default_routing(const Scenario& scenario);

}  // namespace ctmflow::detail
