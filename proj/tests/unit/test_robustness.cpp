#include <gtest/gtest.h>

#include <cmath>

#include "ctmflow/ctmflow.hpp"
#include "generators.hpp"

using namespace ctmflow;

namespace {

Scenario constant_scenario() { return testkit::bundled("fig5_constant.json"); }

/// Source metered to `rate` veh/step, everything else uncontrolled.
RobustnessSetup metered(const Scenario& s, double rate, JunctionModel m = JunctionModel::FifoProportional) {
    RobustnessSetup setup;
    setup.controls = uncontrolled(s);
    const int src = s.network.sources()[0];
    setup.controls.alpha.assign(1, std::vector<double>(s.network.size(), 1.0));
    setup.controls.alpha[0][src] = rate / s.network.cell(src).diagram.capacity(0);
    setup.simulation.model = m;
    return setup;
}

std::vector<double> l1_gaps(const Trajectory& a, const Trajectory& b) {
    std::vector<double> out;
    for (std::size_t t = 0; t < a.x.size(); ++t) {
        double s = 0;
        for (std::size_t i = 0; i < a.x[t].size(); ++i) s += std::abs(a.x[t][i] - b.x[t][i]);
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST(Robustness, EnvelopeExamples) {
    const Scenario s = constant_scenario();
    const int src = s.network.sources()[0];
    const Envelope e = compute_envelope(s, shift_inflow(s, 0.5));
    EXPECT_DOUBLE_EQ(e.lambda_hi[src], 5.5);
    EXPECT_DOUBLE_EQ(e.lambda_lo[src], 4.5);
    for (int i = 0; i < s.network.size(); ++i) {
        EXPECT_EQ(e.x0_hi[i], 0.0);
        EXPECT_EQ(e.x0_lo[i], 0.0);
    }
    Scenario zero = s;
    for (auto& row : zero.inflow) std::fill(row.begin(), row.end(), 0.0);
    EXPECT_DOUBLE_EQ(compute_envelope(zero, shift_inflow(zero, 0.3)).lambda_lo[src], 0.0);
}

TEST(Robustness, Prop3Curve) {
    const Scenario s = constant_scenario();
    for (double v : bound_prop3(s, shift_inflow(s, 0.0)).value) EXPECT_EQ(v, 0.0);
    const BoundCurve c = bound_prop3(s, shift_inflow(s, 0.5));
    ASSERT_EQ(c.value.size(), static_cast<std::size_t>(s.horizon + 1));
    for (std::size_t t = 0; t < c.value.size(); ++t) EXPECT_NEAR(c.value[t], 0.5 * t, 1e-12);
}

TEST(Robustness, Prop3BoundsTheSimulatedDiscrepancy) {
    const Scenario s = constant_scenario();
    const Trajectory nominal = simulate(s);
    const PerturbationSpec p = shift_inflow(s, 0.5);
    const Trajectory perturbed = simulate(apply(s, p));
    ASSERT_TRUE(perturbed.free_flow());
    const BoundCurve c = bound_prop3(s, p);
    const auto gaps = l1_gaps(perturbed, nominal);
    for (std::size_t t = 0; t < gaps.size(); ++t) EXPECT_LE(gaps[t], c.value[t] + 1e-9);
}

TEST(Robustness, LipschitzConstant) {
    EXPECT_DOUBLE_EQ(lipschitz_constant(constant_scenario().network), 4.0);
    Network net({make_cell(1, 0.5, 1.0, 1, 1, 10, {6}, 1), make_cell(2, 0.5, 0.25, 1, 1, 10, {6}, 1)}, {{1, 2}},
                {1}, {2});
    EXPECT_DOUBLE_EQ(lipschitz_constant(net), 2.0 * (0.5 + 0.25));
}

TEST(Robustness, SensitivityClosedForm) {
    const Scenario s = testkit::chain_scenario(3, 5, 1.0);
    ASSERT_DOUBLE_EQ(lipschitz_constant(s.network), 4.0);
    const BoundCurve c = sensitivity_bound(s, shift_inflow(s, 0.5));
    EXPECT_NEAR(c.value[3], (std::exp(12.0) - 1.0) / 4.0 * 0.5, 1e-9 * c.value[3]);
    for (double v : sensitivity_bound(s, shift_inflow(s, 0.0)).value) EXPECT_EQ(v, 0.0);
}

TEST(Robustness, SensitivityAboveProp3) {
    const Scenario s = constant_scenario();
    const PerturbationSpec p = shift_inflow(s, 0.5);
    const BoundCurve sens = sensitivity_bound(s, p);
    const BoundCurve p3 = bound_prop3(s, p);
    for (int t = 1; t <= s.horizon; ++t) EXPECT_GT(sens.value[t], p3.value[t]) << t;
}

TEST(Robustness, EquilibriumOfZeroInflowIsZero) {
    const Scenario s = constant_scenario();
    const int n = s.network.size();
    const auto R = s.routing->at(0);
    const EquilibriumResult e =
        find_equilibrium(s.network, std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), R,
                         std::vector<double>(n, 0.0), {});
    ASSERT_TRUE(e.exists);
    for (double v : e.x) EXPECT_EQ(v, 0.0);
}

TEST(Robustness, MeteredEquilibriumAndOverload) {
    const Scenario s = constant_scenario();
    const RobustnessSetup setup = metered(s, 5.0);
    const int n = s.network.size();
    std::vector<double> lambda(n, 0.0);
    lambda[s.network.sources()[0]] = 5.0;
    const auto alpha = setup.controls.alpha_at(0);
    const auto R = setup.controls.routing.at(0);
    const EquilibriumResult ok = find_equilibrium(s.network, lambda, alpha, R, s.x0, setup.simulation);
    EXPECT_TRUE(ok.exists);
    EXPECT_EQ(ok.reason, "converged");
    lambda[s.network.sources()[0]] = 6.5;
    const EquilibriumResult over = find_equilibrium(s.network, lambda, alpha, R, s.x0, setup.simulation);
    EXPECT_FALSE(over.exists);
    EXPECT_EQ(over.reason, "overload");
    EXPECT_FALSE(bound_prop4(s, shift_inflow(s, 1.5), setup).has_value());
}

TEST(Robustness, Prop4VanishesAtEquilibrium) {
    Scenario s = constant_scenario();
    RobustnessSetup setup;
    const int n = s.network.size();
    std::vector<double> lambda(n, 0.0);
    lambda[s.network.sources()[0]] = 5.0;
    const EquilibriumResult e = find_equilibrium(s.network, lambda, std::vector<double>(n, 1.0), s.routing->at(0),
                                                 s.x0, setup.simulation);
    ASSERT_TRUE(e.exists);
    s.x0 = e.x;
    const auto bound = bound_prop4(s, shift_inflow(s, 0.0), setup);
    ASSERT_TRUE(bound.has_value());
    for (double v : bound->value) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Robustness, Prop4BoundsTheCostPerturbation) {
    const Scenario s = constant_scenario();
    RobustnessSetup setup;
    const PerturbationSpec p = shift_inflow(s, 0.5);
    const auto bound = bound_prop4(s, p, setup);
    ASSERT_TRUE(bound.has_value());
    const double dpsi = cost_perturbation(simulate(apply(s, p)), simulate(s));
    EXPECT_GT(dpsi, 0.0);
    EXPECT_LE(dpsi, bound->sum());
}

TEST(Robustness, MaxFreeflowInflowUnderMetering) {
    const Scenario s = constant_scenario();
    EXPECT_NEAR(max_freeflow_inflow(s, metered(s, 5.0)), 5.0, 1e-3);
    EXPECT_NEAR(max_freeflow_inflow(s, metered(s, 5.0, JunctionModel::NonFifo)), 5.0, 1e-3);
}

TEST(Robustness, ZeroCapacityBottleneckAdmitsNoInflow) {
    Scenario s;
    s.network = Network({make_cell(1, 1, 1, 1, 1, 10, {6}, 1), make_cell(2, 1, 1, 1, 1, 10, {6}, 1),
                         make_cell(3, 1, 1, 1, 1, 10, {6, 0}, 1), make_cell(4, 1, 1, 1, 1, 10, {6}, 1)},
                        {{1, 2}, {2, 3}, {3, 4}}, {1}, {4});
    s.horizon = 20;
    s.x0 = {0, 0, 0, 0};
    s.inflow.assign(20, {1, 0, 0, 0});
    s.routing = RoutingSchedule{{{1, 1, 1}}};
    EXPECT_NEAR(max_freeflow_inflow(s, {}), 0.0, 1e-3);
}

TEST(Robustness, MultiSourceIsRejected) {
    Scenario s;
    s.network = Network({make_cell(1, 1, 1, 1, 1, 10, {6}, 1), make_cell(2, 1, 1, 1, 1, 10, {6}, 1),
                         make_cell(3, 1, 1, 1, 1, 10, {6}, 1)},
                        {{1, 3}, {2, 3}}, {1, 2}, {3});
    s.horizon = 5;
    s.x0 = {0, 0, 0};
    s.inflow.assign(5, {1, 1, 0});
    s.routing = RoutingSchedule{{{1, 1}}};
    EXPECT_THROW(max_freeflow_inflow(s, {}), ConfigError);
}

TEST(Robustness, CombinedBoundSelectsTheSmallerCurve) {
    const Scenario s = constant_scenario();
    RobustnessSetup setup;
    for (double d : {0.01, 0.5, 2.0}) {
        const PerturbationSpec p = shift_inflow(s, d);
        const BoundCurve c = combined_bound(s, p, setup);
        const BoundCurve p3 = bound_prop3(s, p);
        const auto p4 = bound_prop4(s, p, setup);
        for (std::size_t t = 0; t < c.value.size(); ++t) {
            EXPECT_LE(c.value[t], p3.value[t] + 1e-12);
            if (p4) EXPECT_LE(c.value[t], p4->value[t] + 1e-12);
        }
        if (d == 0.01) EXPECT_EQ(c.provenance[1], BoundSource::Prop3);
        if (d == 2.0) EXPECT_EQ(c.provenance.back(), BoundSource::Prop4);
    }
}

TEST(Robustness, OverloadBoundAtThresholdIsTheFreeFlowBound) {
    const Scenario s = constant_scenario();
    const RobustnessSetup setup = metered(s, 5.0);
    const double hat = 5.0;
    const PerturbationSpec p = shift_inflow(s, 0.0);
    const BoundCurve over = overload_bound(s, p, setup, hat);
    const BoundCurve free = combined_bound(s, p, setup, hat);
    EXPECT_TRUE(over.heuristic);
    for (std::size_t t = 0; t < over.value.size(); ++t) EXPECT_NEAR(over.value[t], free.value[t], 1e-9);
}

TEST(Robustness, OverloadSlopeApproachesExcessInflow) {
    const Scenario s = constant_scenario();
    const RobustnessSetup setup = metered(s, 5.0);
    const Trajectory nominal = simulate(s, &setup.controls);
    const Trajectory perturbed = simulate(apply(s, shift_inflow(s, 2.0)), &setup.controls);
    const auto gaps = l1_gaps(perturbed, nominal);
    const double slope = (gaps[200] - gaps[150]) / 50.0;
    EXPECT_NEAR(slope, 2.0, 0.2);
    const BoundCurve over = overload_bound(s, shift_inflow(s, 2.0), setup, 5.0);
    for (std::size_t t = 0; t < gaps.size(); ++t) EXPECT_LE(gaps[t], over.value[t] + 1e-9);
}

TEST(Robustness, SweepIsOrderedAndThreadIndependent) {
    Scenario s = constant_scenario();
    s.horizon = 60;
    s.inflow.resize(60);
    RobustnessSetup setup;
    const std::vector<double> grid{0.0, 0.3, 0.6, 0.9, 1.2};
    const auto a = robustness_sweep(s, setup, grid, 1);
    const auto b = robustness_sweep(s, setup, grid, 4);
    ASSERT_EQ(a.size(), grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_EQ(a[k].delta_lambda, grid[k]);
        EXPECT_EQ(a[k].cost_perturbation, b[k].cost_perturbation);
        EXPECT_EQ(a[k].combined, b[k].combined);
        EXPECT_LE(a[k].cost_perturbation, a[k].combined + 1e-9);
    }
    EXPECT_EQ(a[0].cost_perturbation, 0.0);
}
