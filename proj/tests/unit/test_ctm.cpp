#include <gtest/gtest.h>

#include "ctmflow/ctmflow.hpp"
#include "generators.hpp"
#include "reference_ctm.hpp"

using namespace ctmflow;

namespace {

Cell unit_cell(int id, double C = 6.0, double jam = 10.0) { return make_cell(id, 1, 1, 1, 1, jam, {C}, 1); }

/// 1 -> {2, 3} with R = {2/3, 1/3}; cell supplies set by their volumes.
struct DivergeFixture {
    Network net{{unit_cell(1), unit_cell(2, 10, 20), unit_cell(3, 10, 20)}, {{1, 2}, {1, 3}}, {1}, {2, 3}};
    std::vector<double> R{2.0 / 3.0, 1.0 / 3.0};
    std::vector<double> alpha{1, 1, 1};
    std::vector<double> lambda{0, 0, 0};
    // source demand min(x, alpha*C) = 6; supplies: cell 2 min(20-18, 10) = 2, cell 3 min(20-10, 10) = 10
    std::vector<double> x{6, 18, 10};
};

}  // namespace

TEST(Ctm, FifoDivergeThrottlesBothBranches) {
    DivergeFixture d;
    const FlowRates r = fifo_rates(d.net, d.x, d.alpha, d.R, d.lambda, 0);
    EXPECT_NEAR(r.gamma[0], 0.5, 1e-15);
    EXPECT_NEAR(r.z[0], 3.0, 1e-12);
    EXPECT_NEAR(r.f[0], 2.0, 1e-12);
    EXPECT_NEAR(r.f[1], 1.0, 1e-12);
}

TEST(Ctm, NonFifoDivergeThrottlesOnlyCongestedBranch) {
    DivergeFixture d;
    const FlowRates r = nonfifo_rates(d.net, d.x, d.alpha, d.R, d.lambda, 0);
    EXPECT_NEAR(r.f[0], 2.0, 1e-12);
    EXPECT_NEAR(r.f[1], 2.0, 1e-12);
    EXPECT_NEAR(r.z[0], 4.0, 1e-12);
}

TEST(Ctm, ProportionalMergeSplitsSymmetrically) {
    Network net({unit_cell(1), unit_cell(2), unit_cell(3, 6, 20)}, {{1, 3}, {2, 3}}, {1, 2}, {3});
    const std::vector<double> x{4, 4, 0};
    const FlowRates r = fifo_rates(net, x, {1, 1, 1}, {1, 1}, {0, 0, 0}, 0);
    EXPECT_NEAR(r.f[0], 3.0, 1e-12);
    EXPECT_NEAR(r.f[1], 3.0, 1e-12);
    EXPECT_NEAR(r.y[2], 6.0, 1e-12);
}

TEST(Ctm, SlackSuppliesGiveFreeFlow) {
    DivergeFixture d;
    d.x = {6, 0, 0};
    const FlowRates a = fifo_rates(d.net, d.x, d.alpha, d.R, d.lambda, 0);
    const FlowRates b = nonfifo_rates(d.net, d.x, d.alpha, d.R, d.lambda, 0);
    for (double g : a.gamma) EXPECT_EQ(g, 1.0);
    EXPECT_DOUBLE_EQ(a.z[0], 6.0);
    EXPECT_EQ(a.f, b.f);
    EXPECT_EQ(a.z, b.z);
}

TEST(Ctm, ChainIdenticalUnderBothModels) {
    Scenario s;
    s.network = Network({unit_cell(1), unit_cell(2), unit_cell(3, 2), unit_cell(4)}, {{1, 2}, {2, 3}, {3, 4}}, {1}, {4});
    s.horizon = 20;
    s.x0 = {0, 0, 0, 0};
    s.inflow.assign(20, {5, 0, 0, 0});
    s.routing = RoutingSchedule{{{1, 1, 1}}};
    const Trajectory a = simulate(s);
    SimulationOptions nf;
    nf.model = JunctionModel::NonFifo;
    const Trajectory b = simulate(s, nullptr, nf);
    EXPECT_FALSE(a.free_flow());
    EXPECT_EQ(a.x, b.x);
}

TEST(Ctm, PriorityMergeMedianRule) {
    auto f = priority_merge_flows({4, 4}, 6, {1, 0});
    EXPECT_DOUBLE_EQ(f[0], 4.0);
    EXPECT_DOUBLE_EQ(f[1], 2.0);
    f = priority_merge_flows({4, 4}, 10, {0.3, 0.7});
    EXPECT_DOUBLE_EQ(f[0], 4.0);
    EXPECT_DOUBLE_EQ(f[1], 4.0);
    f = priority_merge_flows({4, 4}, 6, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(f[0], 3.0);
    EXPECT_DOUBLE_EQ(f[1], 3.0);
    // asymmetric demands: the short one is served in full
    f = priority_merge_flows({1, 8}, 6, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(f[0], 1.0);
    EXPECT_DOUBLE_EQ(f[1], 5.0);
}

TEST(Ctm, PriorityModelUsesMedianAtMerges) {
    Network net({unit_cell(1), unit_cell(2), unit_cell(3, 6, 20)}, {{1, 3}, {2, 3}}, {1, 2}, {3});
    const int merge = net.index_of(3);
    MergePriorities pr{{merge, {1.0, 0.0}}};
    const FlowRates r = fifo_priority_rates(net, {4, 4, 0}, {1, 1, 1}, {1, 1}, {0, 0, 0}, 0, pr);
    EXPECT_DOUBLE_EQ(r.f[0], 4.0);
    EXPECT_DOUBLE_EQ(r.f[1], 2.0);
}

TEST(Ctm, StepArithmetic) {
    Network net({unit_cell(1), unit_cell(2)}, {{1, 2}}, {1}, {2});
    FlowRates r;
    r.y = {0, 2};
    r.z = {0, 3};
    r.f = {0};
    r.mu = {0, 3};
    r.gamma = {1, 1};
    const auto next = step(net, {0, 5}, r);
    EXPECT_DOUBLE_EQ(next[1], 4.0);

    const FlowRates zero = fifo_rates(net, {0, 0}, {1, 1}, {1}, {0, 0}, 0);
    EXPECT_EQ(step(net, {0, 0}, zero), (std::vector<double>{0, 0}));
}

TEST(Ctm, StepRejectsLeavingTheBox) {
    Network net({unit_cell(1), unit_cell(2)}, {{1, 2}}, {1}, {2});
    FlowRates r;
    r.y = {0, 0};
    r.z = {0, 3};
    r.f = {0};
    r.mu = {0, 3};
    r.gamma = {1, 1};
    EXPECT_THROW(step(net, {0, 1}, r), InvariantViolation);
}

TEST(Ctm, BundledStepConservesMass) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Trajectory tr = simulate(s);
    for (int t = 0; t < s.horizon; ++t) {
        double before = 0, after = 0, mu = 0;
        for (int i = 0; i < s.network.size(); ++i) {
            before += tr.x[t][i] + s.lambda(t, i);
            after += tr.x[t + 1][i];
            mu += tr.rates[t].mu[i];
        }
        EXPECT_NEAR(after, before - mu, 1e-12);
    }
}

TEST(Ctm, ZeroInflowStaysZero) {
    Scenario s = testkit::bundled("fig5_bottleneck.json");
    for (auto& row : s.inflow) std::fill(row.begin(), row.end(), 0.0);
    const Trajectory tr = simulate(s);
    for (const auto& x : tr.x)
        for (double v : x) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(evaluate_cost(s.network, tr, CostSpec::ttt()), 0.0);
}

TEST(Ctm, BundledScenarioMatchesReference) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    for (bool fifo : {true, false}) {
        SimulationOptions o;
        o.model = fifo ? JunctionModel::FifoProportional : JunctionModel::NonFifo;
        const Trajectory tr = simulate(s, nullptr, o);
        const auto ref = testkit::reference_simulate(s, fifo);
        for (std::size_t t = 0; t < ref.size(); ++t)
            for (std::size_t i = 0; i < ref[t].size(); ++i) EXPECT_NEAR(tr.x[t][i], ref[t][i], 1e-12);
    }
}

TEST(Ctm, BottleneckCongestsUnderFifo) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Trajectory tr = simulate(s);
    EXPECT_LT(tr.min_gamma(), 1.0);
    for (const auto& r : tr.rates)
        for (double g : r.gamma) {
            EXPECT_GE(g, 0.0);
            EXPECT_LE(g, 1.0);
        }
}

TEST(Ctm, SupplyNeverExceeded) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Trajectory tr = simulate(s);
    for (int t = 0; t < s.horizon; ++t)
        for (int j = 0; j < s.network.size(); ++j) {
            if (s.network.is_source(j)) continue;
            EXPECT_LE(tr.rates[t].y[j], supply(s.network.cell(j), tr.x[t][j], t) + 1e-12);
            EXPECT_LE(tr.x[t + 1][j], s.network.cell(j).diagram.jam_volume + 1e-12);
        }
}

TEST(Ctm, UncontrolledRequiresRouting) {
    Scenario s = testkit::bundled("fig5_bottleneck.json");
    s.routing.reset();
    EXPECT_THROW(uncontrolled(s), ConfigError);
}
