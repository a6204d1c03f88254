#include "ctmflow/ctm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctm_kernel.hpp"
#include "ctmflow/errors.hpp"

namespace ctmflow {

const char* to_string(JunctionModel m) {
    switch (m) {
        case JunctionModel::FifoProportional: return "fifo";
        case JunctionModel::FifoPriority: return "fifo-priority";
        case JunctionModel::NonFifo: return "nonfifo";
    }
    return "?";
}

double Trajectory::min_gamma() const {
    double g = 1.0;
    for (const auto& r : rates)
        for (double v : r.gamma) g = std::min(g, v);
    return g;
}

bool Trajectory::free_flow(double tol) const { return min_gamma() >= 1.0 - tol; }

const std::vector<double>& ControlSchedule::alpha_at(int t) const {
    if (alpha.empty()) throw ConfigError("control schedule has no alpha entries");
    const auto n = static_cast<int>(alpha.size());
    return alpha[std::clamp(t, 0, n - 1)];
}

std::vector<double> priority_merge_flows(const std::vector<double>& d, double s, const std::vector<double>& p) {
    if (d.size() != 2 || p.size() != 2)
        throw ConfigError("priority merge needs exactly two upstream cells");
    if (p[0] < 0 || p[1] < 0 || std::abs(p[0] + p[1] - 1.0) > 1e-12)
        throw ConfigError("merge priorities must be nonnegative and sum to 1");
    if (d[0] + d[1] <= s) return d;
    auto mid = [](double a, double b, double c) { return std::max(std::min(a, b), std::min(std::max(a, b), c)); };
    return {mid(d[0], s - d[1], p[0] * s), mid(d[1], s - d[0], p[1] * s)};
}

namespace detail {

void compute_rates_into(const Network& net, const double* x, const double* alpha, const double* R,
                        const double* lambda, int t, const SimulationOptions& options,
                        RateWorkspace& ws, FlowRates& out) {
    const int n = net.size();
    const int np = net.pair_count();
    ws.dbar.resize(n);
    ws.incoming.assign(n, 0.0);
    ws.ratio.resize(n);
    out.f.assign(np, 0.0);
    out.y.assign(n, 0.0);
    out.z.assign(n, 0.0);
    out.mu.assign(n, 0.0);
    out.gamma.assign(n, 1.0);

    for (int i = 0; i < n; ++i) ws.dbar[i] = demand(net.cell(i), x[i], alpha[i], t);
    for (int p = 0; p < np; ++p) ws.incoming[net.pair(p).to] += R[p] * ws.dbar[net.pair(p).from];
    for (int k = 0; k < n; ++k) {
        const double D = ws.incoming[k];
        if (net.is_source(k) || D <= 0.0) {
            ws.ratio[k] = 1.0;
        } else {
            ws.ratio[k] = std::min(1.0, supply(net.cell(k), x[k], t) / D);
        }
    }

    // Demands below 1e-12 veh (round-off left by solvers) are not counted as throttled.
    auto cell_gamma = [&](int i) {
        if (ws.dbar[i] <= 1e-12) return 1.0;
        double g = 1.0;
        for (int p : net.out_pairs(i))
            if (R[p] > 0.0) g = std::min(g, ws.ratio[net.pair(p).to]);
        return g;
    };

    if (options.model == JunctionModel::NonFifo) {
        for (int p = 0; p < np; ++p) {
            const auto& pr = net.pair(p);
            out.f[p] = ws.ratio[pr.to] * R[p] * ws.dbar[pr.from];
        }
        for (int i = 0; i < n; ++i) {
            if (net.is_sink(i)) out.mu[i] = ws.dbar[i];
            double z = out.mu[i];
            for (int p : net.out_pairs(i)) z += out.f[p];
            out.z[i] = z;
            out.gamma[i] = cell_gamma(i);
        }
    } else {
        for (int i = 0; i < n; ++i) out.gamma[i] = net.is_sink(i) ? 1.0 : cell_gamma(i);

        if (options.model == JunctionModel::FifoPriority) {
            for (int k = 0; k < n; ++k) {
                const auto& in = net.in_pairs(k);
                if (in.size() < 2) continue;
                bool merge = true;
                for (int p : in) merge = merge && net.out_pairs(net.pair(p).from).size() == 1;
                if (!merge) continue;  // general junction: proportional allocation
                if (in.size() != 2)
                    throw ConfigError("priority merge at cell " + std::to_string(net.cell(k).id) +
                                      " has more than two upstream cells");
                std::vector<double> pri{0.5, 0.5};
                if (auto it = options.priorities.find(k); it != options.priorities.end()) pri = it->second;
                const int h0 = net.pair(in[0]).from, h1 = net.pair(in[1]).from;
                const double s = supply(net.cell(k), x[k], t);
                const auto flows = priority_merge_flows({ws.dbar[h0], ws.dbar[h1]}, s, pri);
                out.gamma[h0] = ws.dbar[h0] > 0 ? std::clamp(flows[0] / ws.dbar[h0], 0.0, 1.0) : 1.0;
                out.gamma[h1] = ws.dbar[h1] > 0 ? std::clamp(flows[1] / ws.dbar[h1], 0.0, 1.0) : 1.0;
            }
        }

        for (int i = 0; i < n; ++i) {
            if (net.is_sink(i)) {
                out.mu[i] = ws.dbar[i];
                out.z[i] = ws.dbar[i];
                continue;
            }
            out.z[i] = out.gamma[i] * ws.dbar[i];
            for (int p : net.out_pairs(i)) out.f[p] = R[p] * out.z[i];
        }
    }

    for (int i = 0; i < n; ++i) out.y[i] = lambda ? lambda[i] : 0.0;
    for (int p = 0; p < np; ++p) out.y[net.pair(p).to] += out.f[p];
}

void step_into(const Network& net, const std::vector<double>& x, const FlowRates& rates,
               std::vector<double>& next, int t) {
    const int n = net.size();
    next.resize(n);
    for (int i = 0; i < n; ++i) {
        double v = x[i] + rates.y[i] - rates.z[i];
        const double jam = net.cell(i).diagram.jam_volume;
        const double tol = 1e-9 * std::max(1.0, jam);
        if (v < 0.0) {
            if (v < -tol)
                throw InvariantViolation("negative volume " + std::to_string(v) + " at cell " +
                                             std::to_string(net.cell(i).id) + " step " + std::to_string(t),
                                         t);
            v = 0.0;
        }
        if (!net.is_source(i) && v > jam) {
            if (v > jam + tol)
                throw InvariantViolation("volume " + std::to_string(v) + " above jam at cell " +
                                             std::to_string(net.cell(i).id) + " step " + std::to_string(t),
                                         t);
            v = jam;
        }
        next[i] = v;
    }
}

RoutingSchedule default_routing(const Scenario& s) {
    if (s.routing) return *s.routing;
    const Network& net = s.network;
    RoutingSchedule R;
    R.steps.assign(1, std::vector<double>(net.pair_count(), 0.0));
    for (int i = 0; i < net.size(); ++i) {
        const auto& out = net.out_pairs(i);
        if (out.size() > 1)
            throw ConfigError("scenario has no routing but cell " + std::to_string(net.cell(i).id) +
                              " has several successors");
        if (out.size() == 1) R.steps[0][out[0]] = 1.0;
    }
    return R;
}

}  // namespace detail

FlowRates compute_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                        const std::vector<double>& R, const std::vector<double>& lambda, int t,
                        const SimulationOptions& options) {
    if (static_cast<int>(x.size()) != net.size() || static_cast<int>(alpha.size()) != net.size() ||
        static_cast<int>(R.size()) != net.pair_count() ||
        (!lambda.empty() && static_cast<int>(lambda.size()) != net.size()))
        throw ConfigError("compute_rates: argument sizes do not match the network");
    detail::RateWorkspace ws;
    FlowRates out;
    detail::compute_rates_into(net, x.data(), alpha.data(), R.data(), lambda.empty() ? nullptr : lambda.data(),
                               t, options, ws, out);
    return out;
}

FlowRates fifo_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                     const std::vector<double>& R, const std::vector<double>& lambda, int t) {
    return compute_rates(net, x, alpha, R, lambda, t, {JunctionModel::FifoProportional, {}});
}

FlowRates fifo_priority_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                              const std::vector<double>& R, const std::vector<double>& lambda, int t,
                              const MergePriorities& priorities) {
    return compute_rates(net, x, alpha, R, lambda, t, {JunctionModel::FifoPriority, priorities});
}

FlowRates nonfifo_rates(const Network& net, const std::vector<double>& x, const std::vector<double>& alpha,
                        const std::vector<double>& R, const std::vector<double>& lambda, int t) {
    return compute_rates(net, x, alpha, R, lambda, t, {JunctionModel::NonFifo, {}});
}

std::vector<double> step(const Network& net, const std::vector<double>& x, const FlowRates& rates, int t) {
    std::vector<double> next;
    detail::step_into(net, x, rates, next, t);
    return next;
}

ControlSchedule uncontrolled(const Scenario& scenario) {
    ControlSchedule c;
    c.alpha.assign(1, std::vector<double>(scenario.network.size(), 1.0));
    c.routing = detail::default_routing(scenario);
    return c;
}

Trajectory simulate(const Scenario& s, const ControlSchedule* controls, const SimulationOptions& options) {
    const Network& net = s.network;
    const int n = net.size();
    if (static_cast<int>(s.x0.size()) != n) throw ConfigError("simulate: x0 does not match the network");

    ControlSchedule fallback;
    if (!controls || controls->alpha.empty() || controls->routing.empty()) {
        fallback = uncontrolled(s);
        if (controls && !controls->alpha.empty()) fallback.alpha = controls->alpha;
        if (controls && !controls->routing.empty()) fallback.routing = controls->routing;
        controls = &fallback;
    }

    Trajectory traj;
    traj.model = options.model;
    traj.x.reserve(s.horizon + 1);
    traj.rates.resize(s.horizon);
    traj.x.push_back(s.x0);
    detail::RateWorkspace ws;
    std::vector<double> zero(n, 0.0);
    for (int t = 0; t < s.horizon; ++t) {
        const auto& alpha = controls->alpha_at(t);
        const auto& R = controls->routing.at(t);
        if (static_cast<int>(alpha.size()) != n || static_cast<int>(R.size()) != net.pair_count())
            throw ConfigError("simulate: control sizes do not match the network at step " + std::to_string(t));
        const double* lam = t < static_cast<int>(s.inflow.size()) ? s.inflow[t].data() : zero.data();
        detail::compute_rates_into(net, traj.x[t].data(), alpha.data(), R.data(), lam, t, options, ws,
                                   traj.rates[t]);
        std::vector<double> next;
        detail::step_into(net, traj.x[t], traj.rates[t], next, t);
        traj.x.push_back(std::move(next));
    }
    return traj;
}

}  // namespace ctmflow
