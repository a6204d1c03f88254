#pragma once

#include <map>
#include <vector>

#include "ctmflow/network.hpp"

namespace ctmflow {

enum class JunctionModel { FifoProportional, FifoPriority, NonFifo };

const char* to_string(JunctionModel m);

/// Rates for one step. All flows in veh/step.
struct FlowRates {
    std::vector<double> f;      ///< per adjacent pair
    std::vector<double> y;      ///< total inflow per cell
    std::vector<double> z;      ///< total outflow per cell
    std::vector<double> mu;     ///< external outflow (non-zero on sinks only)
    std::vector<double> gamma;  ///< throttling coefficient per cell, 1 in free flow
};

struct Trajectory {
    std::vector<std::vector<double>> x;  ///< x[0..T]
    std::vector<FlowRates> rates;        ///< rates[0..T-1]
    JunctionModel model = JunctionModel::FifoProportional;

    int horizon() const { return static_cast<int>(rates.size()); }
    /// min over steps and cells of gamma (1 for an empty trajectory).
    double min_gamma() const;
    /// Every gamma within `tol` of 1.
    bool free_flow(double tol = 1e-9) const;
};

/// Open-loop controls: demand scaling alpha(t) per cell and routing R(t).
struct ControlSchedule {
    std::vector<std::vector<double>> alpha;  ///< alpha[t][cell]; missing steps repeat the last
    RoutingSchedule routing;

    const std::vector<double>& alpha_at(int t) const;
};

/// Priorities at merge junctions used by JunctionModel::FifoPriority.
/// Keyed by the internal index of the merge's downstream cell; values follow the order
/// of that cell's in_pairs(). Merges without an entry use equal priorities.
using MergePriorities = std::map<int, std::vector<double>>;

struct SimulationOptions {
    JunctionModel model = JunctionModel::FifoProportional;
    MergePriorities priorities;
};

/// FIFO rates with proportional merge allocation.
FlowRates fifo_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                     const std::vector<double>& R, const std::vector<double>& lambda, int t);

/// FIFO rates with the median priority rule at two-input merges.
FlowRates fifo_priority_rates(const Network& net, const std::vector<double>& x,
                              const std::vector<double>& alpha, const std::vector<double>& R,
                              const std::vector<double>& lambda, int t,
                              const MergePriorities& priorities);

/// Non-FIFO rates: each downstream cell throttles only the flow headed to it.
FlowRates nonfifo_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                        const std::vector<double>& R, const std::vector<double>& lambda, int t);

FlowRates compute_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                        const std::vector<double>& R, const std::vector<double>& lambda, int t,
                        const SimulationOptions& options);

/// Two-input merge: f_i = mid{d_i, s - d_h, p_i s} when d_i + d_h > s, else the demands.
std::vector<double> priority_merge_flows(const std::vector<double>& demands, double supply,
                                         const std::vector<double>& priorities);

/// x+ = x + y - z. Throws InvariantViolation if the result leaves [0, jam].
std::vector<double> step(const Network& net, const std::vector<double>& x, const FlowRates& rates,
                         int t = -1);

/// Open-loop simulation over the scenario horizon. `controls == nullptr` means alpha = 1
/// with the scenario routing.
Trajectory simulate(const Scenario& scenario, const ControlSchedule* controls = nullptr,
                    const SimulationOptions& options = {});

/// All-ones alpha with the scenario routing (ConfigError if the scenario has none).
ControlSchedule uncontrolled(const Scenario& scenario);

}  // namespace ctmflow
