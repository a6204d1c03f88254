#include "ctmflow/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ctmflow {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

void write_trajectory_csv(std::ostream& out, const Network& net, const Trajectory& traj) {
    out << "step,cell,x_veh,y_veh_per_step,z_veh_per_step,mu_veh_per_step,gamma\n";
    for (std::size_t t = 0; t < traj.x.size(); ++t)
        for (int i = 0; i < net.size(); ++i) {
            const bool has = t < traj.rates.size();
            out << t << ',' << net.cell(i).id << ',' << format_number(traj.x[t][i]) << ','
                << format_number(has ? traj.rates[t].y[i] : 0.0) << ','
                << format_number(has ? traj.rates[t].z[i] : 0.0) << ','
                << format_number(has ? traj.rates[t].mu[i] : 0.0) << ','
                << format_number(has ? traj.rates[t].gamma[i] : 1.0) << '\n';
        }
}

void write_alpha_csv(std::ostream& out, const Network& net, const ControlSchedule& controls, int horizon) {
    out << "step,cell,alpha\n";
    for (int t = 0; t < horizon; ++t) {
        const auto& a = controls.alpha_at(t);
        for (int i = 0; i < net.size(); ++i) out << t << ',' << net.cell(i).id << ',' << format_number(a[i]) << '\n';
    }
}

void write_routing_csv(std::ostream& out, const Network& net, const ControlSchedule& controls, int horizon) {
    out << "step,i,j,R\n";
    for (int t = 0; t < horizon; ++t) {
        const auto& r = controls.routing.at(t);
        for (int p = 0; p < net.pair_count(); ++p)
            out << t << ',' << net.cell(net.pair(p).from).id << ',' << net.cell(net.pair(p).to).id << ','
                << format_number(r[p]) << '\n';
    }
}

void write_bound_csv(std::ostream& out, const BoundCurve& curve) {
    out << "step,bound_veh,provenance\n";
    for (std::size_t t = 0; t < curve.value.size(); ++t)
        out << t << ',' << format_number(curve.value[t]) << ',' << to_string(curve.provenance[t]) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points, const std::string& model) {
    out << "delta_lambda_veh_per_step,simulated_cost_perturbation_veh_steps,combined_bound_veh_steps,"
           "prop3_bound_veh_steps,sensitivity_bound_veh_steps,min_gamma,free_flow,branch,model\n";
    for (const auto& p : points)
        out << format_number(p.delta_lambda) << ',' << format_number(p.cost_perturbation) << ','
            << format_number(p.combined) << ',' << format_number(p.prop3) << ',' << format_number(p.sensitivity)
            << ',' << format_number(p.min_gamma) << ',' << (p.free_flow ? 1 : 0) << ',' << p.branch << ','
            << model << '\n';
}

}  // namespace ctmflow
