#include <gtest/gtest.h>

#include "ctmflow/ctmflow.hpp"
#include "generators.hpp"

using namespace ctmflow;

TEST(ScenarioIo, RoundTripPreservesContent) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Scenario back = parse_scenario(scenario_to_json(s));
    EXPECT_EQ(scenario_hash(s), scenario_hash(back));
    EXPECT_EQ(back.horizon, 25);
    EXPECT_DOUBLE_EQ(back.tau, 10.0);
}

TEST(ScenarioIo, ConstantInflowExpands) {
    const Scenario s = testkit::bundled("fig5_constant.json");
    ASSERT_EQ(s.inflow.size(), 200u);
    const int src = s.network.sources()[0];
    for (const auto& row : s.inflow) EXPECT_EQ(row[src], 5.0);
}

TEST(ScenarioIo, SingleSuccessorRoutingDefaultsToOne) {
    const Scenario s = testkit::bundled("fig5_bottleneck.json");
    const Network& net = s.network;
    EXPECT_DOUBLE_EQ(s.routing->at(0)[net.pair_index(net.index_of(1), net.index_of(2))], 1.0);
    EXPECT_NEAR(s.routing->at(0)[net.pair_index(net.index_of(2), net.index_of(3))], 2.0 / 3.0, 1e-15);
}

TEST(ScenarioIo, MalformedInputNamesTheField) {
    EXPECT_THROW(parse_scenario("{not json"), ConfigError);
    try {
        parse_scenario(R"({"units": {}, "tau": 10, "T": 5, "cells": "oops"})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cells"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_scenario(R"({"tau": 10})"), ConfigError);  // no units header
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}
