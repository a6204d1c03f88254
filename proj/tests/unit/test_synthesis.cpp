#include <gtest/gtest.h>

#include "ctmflow/ctmflow.hpp"
#include "generators.hpp"

using namespace ctmflow;

namespace {

Cell unit_cell(int id) { return make_cell(id, 1, 1, 1, 1, 10, {6}, 1); }

/// 1 -> 2 -> {3, 4}, T = 1, no flow anywhere unless set by hand.
Scenario diverge_scenario() {
    Scenario s;
    s.network = Network({unit_cell(1), unit_cell(2), unit_cell(3), unit_cell(4)}, {{1, 2}, {2, 3}, {2, 4}}, {1},
                        {3, 4});
    s.horizon = 1;
    s.x0 = {0, 0, 0, 0};
    s.inflow = {{0, 0, 0, 0}};
    s.routing = RoutingSchedule{{{1.0, 0.5, 0.5}}};
    return s;
}

Solution blank(const ConvexProgram& P) {
    Solution s;
    s.values.assign(P.variable_count(), 0.0);
    s.status = SolveStatus::Optimal;
    return s;
}

struct Replayed {
    ConvexProgram program;
    Solution solution;
    ControlSchedule controls;
    Trajectory reference;
};

Replayed optimum(const Scenario& s, const CostSpec& cost, ProgramKind kind) {
    Replayed r{build_program(s, cost, kind), {}, {}, {}};
    r.solution = solve(r.program);
    r.controls = extract_controls(r.program, r.solution, s);
    r.reference = trajectory_from_solution(r.program, r.solution, s.network);
    return r;
}

}  // namespace

TEST(Synthesis, AlphaIsOutflowOverDemand) {
    const Scenario s = diverge_scenario();
    const ConvexProgram P = build_dta(s, CostSpec::ttt());
    Solution sol = blank(P);
    const auto& L = *P.layout;
    sol.values[L.x(0, 1)] = 4.0;
    sol.values[L.z(0, 1)] = 3.0;
    sol.values[L.z(0, 0)] = 1.5;  // source: alpha = z / C
    const ControlSchedule c = extract_controls(P, sol, s);
    EXPECT_DOUBLE_EQ(c.alpha_at(0)[1], 0.75);
    EXPECT_DOUBLE_EQ(c.alpha_at(0)[0], 0.25);
    EXPECT_DOUBLE_EQ(c.alpha_at(0)[2], 1.0);  // z = d = 0
}

TEST(Synthesis, IdleDivergeSplitsUniformly) {
    const Scenario s = diverge_scenario();
    const ConvexProgram P = build_dta(s, CostSpec::ttt());
    const ControlSchedule c = extract_controls(P, blank(P), s);
    const Network& net = s.network;
    EXPECT_DOUBLE_EQ(c.routing.at(0)[net.pair_index(1, 2)], 0.5);
    EXPECT_DOUBLE_EQ(c.routing.at(0)[net.pair_index(1, 3)], 0.5);
    EXPECT_DOUBLE_EQ(c.routing.at(0)[net.pair_index(0, 1)], 1.0);
}

TEST(Synthesis, DtaRoutingFollowsFlows) {
    const Scenario s = diverge_scenario();
    const ConvexProgram P = build_dta(s, CostSpec::ttt());
    Solution sol = blank(P);
    const auto& L = *P.layout;
    const Network& net = s.network;
    sol.values[L.x(0, 1)] = 4.0;
    sol.values[L.z(0, 1)] = 4.0;
    sol.values[L.f(0, net.pair_index(1, 2))] = 1.0;
    sol.values[L.f(0, net.pair_index(1, 3))] = 3.0;
    const ControlSchedule c = extract_controls(P, sol, s);
    EXPECT_DOUBLE_EQ(c.routing.at(0)[net.pair_index(1, 2)], 0.25);
    EXPECT_DOUBLE_EQ(c.routing.at(0)[net.pair_index(1, 3)], 0.75);
}

TEST(Synthesis, OutflowFromEmptyCellIsRejected) {
    const Scenario s = diverge_scenario();
    const ConvexProgram P = build_dta(s, CostSpec::ttt());
    Solution sol = blank(P);
    sol.values[P.layout->z(0, 1)] = 1.0;
    EXPECT_THROW(extract_controls(P, sol, s), ConfigError);
}

TEST(Synthesis, UncontrolledReplayOfCongestedScenarioIsFlagged) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Trajectory ref = simulate(s);
    const RealizationReport r = verify_realization(uncontrolled(s), s, ref);
    EXPECT_TRUE(r.reproduces());
    EXPECT_FALSE(r.all_free_flow());
    EXPECT_LT(r.min_gamma, 1.0);
}

TEST(Synthesis, LinearOptimaReplayInFreeFlow) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    for (ProgramKind k : {ProgramKind::DTA, ProgramKind::FNC}) {
        const Replayed o = optimum(s, CostSpec::ttt(), k);
        ASSERT_TRUE(o.solution.optimal());
        for (JunctionModel m : {JunctionModel::FifoProportional, JunctionModel::NonFifo}) {
            SimulationOptions opt;
            opt.model = m;
            const RealizationReport r = verify_realization(o.controls, s, o.reference, opt);
            EXPECT_TRUE(r.reproduces()) << to_string(k) << " " << to_string(m) << " dev " << r.max_deviation;
            EXPECT_TRUE(r.all_free_flow()) << to_string(k) << " " << to_string(m);
            EXPECT_TRUE(r.identity_holds());
            EXPECT_NEAR(r.simulated_cost, o.solution.objective, 1e-6 * (1 + o.solution.objective));
        }
    }
}

TEST(Synthesis, QuadraticOptimumReplaysInFreeFlow) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Replayed o = optimum(s, CostSpec::quadratic(), ProgramKind::DTA);
    ASSERT_TRUE(o.solution.optimal());
    const RealizationReport r = verify_realization(o.controls, s, o.reference);
    EXPECT_TRUE(r.reproduces()) << r.max_deviation;
    EXPECT_TRUE(r.all_free_flow());
}

TEST(Synthesis, ExtractedRoutingRowsSumToOne) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Replayed o = optimum(s, CostSpec::ttt(), ProgramKind::DTA);
    const Network& net = s.network;
    for (int t = 0; t < s.horizon; ++t) {
        const auto& R = o.controls.routing.at(t);
        for (int i = 0; i < net.size(); ++i) {
            if (net.is_sink(i)) continue;
            double sum = 0.0;
            for (int p : net.out_pairs(i)) sum += R[p];
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
        for (double a : o.controls.alpha_at(t)) {
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, 1.0);
        }
    }
}

TEST(Synthesis, StructureCheckOnBundledScenario) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Replayed o = optimum(s, CostSpec::ttt(), ProgramKind::FNC);
    const StructureReport r = check_fnc_structure(s, o.program, o.solution, CostSpec::ttt());
    ASSERT_TRUE(r.applicable) << r.reason;
    EXPECT_TRUE(r.costs_match());
    EXPECT_LE(r.max_outflow_gap, 1e-6);
    EXPECT_GT(r.checked, 0);
}

TEST(Synthesis, StructureCheckRefusesOutsideItsSetting) {
    Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Replayed quad = optimum(s, CostSpec::quadratic(), ProgramKind::FNC);
    EXPECT_FALSE(check_fnc_structure(s, quad.program, quad.solution, CostSpec::quadratic()).applicable);
    const Replayed dta = optimum(s, CostSpec::ttt(), ProgramKind::DTA);
    EXPECT_FALSE(check_fnc_structure(s, dta.program, dta.solution, CostSpec::ttt()).applicable);

    std::mt19937_64 rng(5);
    testkit::GeneratorOptions opt;
    opt.horizon = 4;
    const Scenario uneven = testkit::random_scenario(rng, opt);
    const Replayed u = optimum(uneven, CostSpec::ttt(), ProgramKind::FNC);
    const StructureReport r = check_fnc_structure(uneven, u.program, u.solution, CostSpec::ttt());
    EXPECT_FALSE(r.applicable);
    EXPECT_FALSE(r.reason.empty());
}
