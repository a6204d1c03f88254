#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctmflow/ctm.hpp"

namespace ctmflow {

struct PerturbationSpec {
    std::vector<double> x0;                   ///< perturbed initial volumes
    std::vector<std::vector<double>> inflow;  ///< perturbed inflow[t][cell], t in 0..T-1
};

/// Adds `delta` to every source inflow at every step; x0 unchanged.
PerturbationSpec shift_inflow(const Scenario& scenario, double delta);
/// Scenario with the perturbed data swapped in.
Scenario apply(const Scenario& scenario, const PerturbationSpec& p);

enum class BoundSource { Prop3, Prop4, Overload, Sensitivity, Combined };

const char* to_string(BoundSource s);

struct BoundCurve {
    std::vector<double> value;              ///< t = 0..T
    std::vector<BoundSource> provenance;
    bool hypothesis_holds = true;           ///< free-flow / equilibrium probe outcome
    bool heuristic = false;                 ///< overload branch

    double sum() const;
};

struct Envelope {
    std::vector<double> lambda_hi;  ///< per cell (zero on non-sources)
    std::vector<double> lambda_lo;
    std::vector<double> x0_hi;
    std::vector<double> x0_lo;
};

struct EquilibriumResult {
    bool exists = false;
    std::vector<double> x;
    long steps = 0;
    std::string reason;  ///< "converged", "overload" or "step-cap"
};

/// Controls and junction model shared by the robustness computations.
struct RobustnessSetup {
    ControlSchedule controls;     ///< empty alpha means all ones with the scenario routing
    SimulationOptions simulation;
};

BoundCurve bound_prop3(const Scenario& scenario, const PerturbationSpec& p);

Envelope compute_envelope(const Scenario& scenario, const PerturbationSpec& p);

/// Iterate the CTM with constant inflow and controls from `x_init` until the step change
/// is below 1e-8 (infinity-norm), a source exceeds 1e3 times the largest jam volume,
/// or 1e5 steps elapse.
EquilibriumResult find_equilibrium(const Network& net, const std::vector<double>& inflow,
                                   const std::vector<double>& alpha, const std::vector<double>& R,
                                   const std::vector<double>& x_init, const SimulationOptions& options,
                                   long max_steps = 100000);

/// Constant-in-t envelope bound; std::nullopt when an extreme equilibrium does not exist.
std::optional<BoundCurve> bound_prop4(const Scenario& scenario, const PerturbationSpec& p,
                                      const RobustnessSetup& setup);

/// Largest constant inflow on the single source keeping the bounds applicable:
/// FIFO requires gamma = 1 over the horizon and an equilibrium; non-FIFO an equilibrium.
/// Bisection to width 1e-3. ConfigError for multi-source scenarios.
double max_freeflow_inflow(const Scenario& scenario, const RobustnessSetup& setup, double tol = 1e-3);

/// Free-flow bound up to lambda_hat plus ||lambda~ - lambda_hat||_1 * t. Tagged heuristic.
BoundCurve overload_bound(const Scenario& scenario, const PerturbationSpec& p,
                          const RobustnessSetup& setup, double lambda_hat);

/// 2 (max demand slope + max |supply slope| over non-sources).
double lipschitz_constant(const Network& net);

/// (e^{Lt} - 1)/L * ||dlambda|| + e^{Lt} ||dx0|| for constant ||dlambda||; otherwise
/// the step-wise sum of the integral form. Overflow yields +inf.
BoundCurve sensitivity_bound(const Scenario& scenario, const PerturbationSpec& p);

/// Pointwise min of Prop3 and (if applicable) Prop4, or the overload bound when the
/// perturbed constant inflow exceeds lambda_hat. Pass lambda_hat < 0 to compute it.
BoundCurve combined_bound(const Scenario& scenario, const PerturbationSpec& p,
                          const RobustnessSetup& setup, double lambda_hat = -1.0);

/// sum_t ||x~(t) - x(t)||_1 style signed difference sum_t sum_i (x~_i - x_i).
double cost_perturbation(const Trajectory& perturbed, const Trajectory& nominal);

struct SweepPoint {
    double delta_lambda = 0.0;
    double cost_perturbation = 0.0;  ///< sum_t sum_i (x~ - x)
    double combined = 0.0;           ///< sum_t combined bound
    double prop3 = 0.0;
    double sensitivity = 0.0;        ///< sum_t sensitivity bound (may be inf)
    double min_gamma = 1.0;
    double perturbed_cost = 0.0;     ///< sum_t sum_i x~
    bool free_flow = true;
    bool sensitivity_dominates = true;  ///< sensitivity(t) > combined(t) for every t >= 1
    std::string branch;              ///< provenance summary
};

/// Perturbed simulations and bounds for each delta on the source inflow.
/// Points are computed on up to `jobs` threads and returned in input order.
std::vector<SweepPoint> robustness_sweep(const Scenario& scenario, const RobustnessSetup& setup,
                                         const std::vector<double>& deltas, int jobs = 1,
                                         bool with_bounds = true);

}  // namespace ctmflow
