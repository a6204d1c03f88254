#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ctmflow/ctm.hpp"
#include "ctmflow/robustness.hpp"

namespace ctmflow {

/// 12 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double v);

void write_trajectory_csv(std::ostream& out, const Network& net, const Trajectory& traj);
void write_alpha_csv(std::ostream& out, const Network& net, const ControlSchedule& controls, int horizon);
void write_routing_csv(std::ostream& out, const Network& net, const ControlSchedule& controls, int horizon);
void write_bound_csv(std::ostream& out, const BoundCurve& curve);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points, const std::string& model);

}  // namespace ctmflow
