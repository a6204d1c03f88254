#pragma once

#include <string>

#include "ctmflow/network.hpp"

namespace ctmflow {

/// Parse a scenario document. Throws ConfigError with the offending field on malformed input.
///
/// Layout: {"units": {...}, "tau", "T", "cells": [{id, v, w, L, lanes, jam, capacity: [...]}],
/// "adjacency": [[i, j], ...], "sources", "sinks", "routing": {"i,j": [r...]},
/// "inflow": {"i": [...] | {"constant": v}}, "x0": [...]}.
/// Routing may omit pairs leaving single-successor cells (ratio 1).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Serialize back to the same layout (units header included).
std::string scenario_to_json(const Scenario& scenario);

}  // namespace ctmflow
