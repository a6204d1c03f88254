#include "ctmflow/robustness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "ctm_kernel.hpp"
#include "ctmflow/cost.hpp"
#include "ctmflow/errors.hpp"

namespace ctmflow {

namespace {

constexpr double kUnbounded = std::numeric_limits<double>::infinity();
// Capacity schedules are constant-extended, so a far-future step reads their final value.
constexpr int kLongRun = 1 << 30;

std::vector<double> inflow_row(const std::vector<std::vector<double>>& inflow, int t, int n) {
    return t < static_cast<int>(inflow.size()) ? inflow[t] : std::vector<double>(n, 0.0);
}

double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

std::vector<double> inflow_l1_per_step(const Scenario& s, const PerturbationSpec& p) {
    const int n = s.network.size();
    std::vector<double> d(s.horizon, 0.0);
    for (int t = 0; t < s.horizon; ++t) d[t] = l1_diff(inflow_row(s.inflow, t, n), inflow_row(p.inflow, t, n));
    return d;
}

ControlSchedule effective_controls(const Scenario& s, const RobustnessSetup& setup) {
    ControlSchedule c = setup.controls;
    if (c.alpha.empty() || c.routing.empty()) {
        ControlSchedule u = uncontrolled(s);
        if (c.alpha.empty()) c.alpha = u.alpha;
        if (c.routing.empty()) c.routing = u.routing;
    }
    return c;
}

// Optimal schedules carry start-up and end-of-horizon transients; the mid-horizon step stands
// in for the constant controls an equilibrium needs.
int steady_step(const Scenario& s) { return std::max(0, s.horizon / 2); }

int single_source(const Scenario& s) {
    if (s.network.sources().size() != 1)
        throw ConfigError("robustness: a single-source network is required for the free-flow inflow limit");
    return s.network.sources().front();
}

bool stays_free_flow(const Scenario& s, const ControlSchedule& c, const SimulationOptions& o) {
    return simulate(s, &c, o).free_flow(1e-9);
}

Scenario constant_inflow(const Scenario& s, int source, double level) {
    Scenario out = s;
    out.inflow.assign(s.horizon, std::vector<double>(s.network.size(), 0.0));
    for (auto& row : out.inflow) row[source] = level;
    return out;
}

BoundCurve pointwise_min(const BoundCurve& a, const std::optional<BoundCurve>& b) {
    BoundCurve out = a;
    out.provenance.assign(a.value.size(), BoundSource::Prop3);
    if (!b) return out;
    for (std::size_t t = 0; t < out.value.size(); ++t)
        if (b->value[t] < out.value[t]) {
            out.value[t] = b->value[t];
            out.provenance[t] = BoundSource::Prop4;
        }
    return out;
}

}  // namespace

PerturbationSpec shift_inflow(const Scenario& s, double delta) {
    const int n = s.network.size();
    PerturbationSpec p;
    p.x0 = s.x0;
    p.inflow.resize(s.horizon);
    for (int t = 0; t < s.horizon; ++t) {
        p.inflow[t] = inflow_row(s.inflow, t, n);
        for (int i : s.network.sources()) p.inflow[t][i] += delta;
    }
    return p;
}

Scenario apply(const Scenario& s, const PerturbationSpec& p) {
    Scenario out = s;
    out.x0 = p.x0;
    out.inflow = p.inflow;
    return out;
}

const char* to_string(BoundSource s) {
    switch (s) {
        case BoundSource::Prop3: return "prop3";
        case BoundSource::Prop4: return "prop4";
        case BoundSource::Overload: return "overload";
        case BoundSource::Sensitivity: return "sensitivity";
        case BoundSource::Combined: return "combined";
    }
    return "unknown";
}

double BoundCurve::sum() const {
    double s = 0.0;
    for (double v : value) s += v;
    return s;
}

BoundCurve bound_prop3(const Scenario& s, const PerturbationSpec& p) {
    BoundCurve c;
    const auto dl = inflow_l1_per_step(s, p);
    c.value.assign(s.horizon + 1, 0.0);
    c.provenance.assign(s.horizon + 1, BoundSource::Prop3);
    c.value[0] = l1_diff(p.x0, s.x0);
    for (int t = 1; t <= s.horizon; ++t) c.value[t] = c.value[t - 1] + dl[t - 1];
    return c;
}

Envelope compute_envelope(const Scenario& s, const PerturbationSpec& p) {
    const int n = s.network.size();
    Envelope e;
    e.lambda_hi.assign(n, 0.0);
    e.lambda_lo.assign(n, 0.0);
    e.x0_hi.resize(n);
    e.x0_lo.resize(n);
    for (int i : s.network.sources()) {
        double dev = 0.0, hi = -kUnbounded, lo = kUnbounded;
        for (int t = 0; t < s.horizon; ++t) {
            const double a = s.lambda(t, i);
            const double b = t < static_cast<int>(p.inflow.size()) ? p.inflow[t][i] : 0.0;
            dev = std::max(dev, std::abs(a - b));
            hi = std::max(hi, a);
            lo = std::min(lo, a);
        }
        if (s.horizon == 0) hi = lo = 0.0;
        e.lambda_hi[i] = hi + dev;
        e.lambda_lo[i] = std::max(0.0, lo - dev);
    }
    for (int i = 0; i < n; ++i) {
        const double d = std::abs(s.x0[i] - p.x0[i]);
        e.x0_hi[i] = s.x0[i] + d;
        e.x0_lo[i] = std::max(0.0, s.x0[i] - d);
    }
    return e;
}

EquilibriumResult find_equilibrium(const Network& net, const std::vector<double>& inflow,
                                   const std::vector<double>& alpha, const std::vector<double>& R,
                                   const std::vector<double>& x_init, const SimulationOptions& options,
                                   long max_steps) {
    EquilibriumResult res;
    double jam_scale = 0.0;
    for (const Cell& c : net.cells()) jam_scale = std::max(jam_scale, c.diagram.jam_volume);
    const double overload = 1e3 * jam_scale;

    detail::RateWorkspace ws;
    FlowRates rates;
    std::vector<double> x = x_init, next;
    for (long k = 0; k < max_steps; ++k) {
        detail::compute_rates_into(net, x.data(), alpha.data(), R.data(), inflow.data(), kLongRun, options, ws,
                                   rates);
        detail::step_into(net, x, rates, next, kLongRun);
        double change = 0.0;
        for (int i = 0; i < net.size(); ++i) change = std::max(change, std::abs(next[i] - x[i]));
        x.swap(next);
        res.steps = k + 1;
        if (change <= 1e-8) {
            res.exists = true;
            res.x = std::move(x);
            res.reason = "converged";
            return res;
        }
        for (int i : net.sources())
            if (x[i] > overload) {
                res.reason = "overload";
                return res;
            }
    }
    res.reason = "step-cap";
    return res;
}

std::optional<BoundCurve> bound_prop4(const Scenario& s, const PerturbationSpec& p, const RobustnessSetup& setup) {
    const Envelope e = compute_envelope(s, p);
    const ControlSchedule c = effective_controls(s, setup);
    const int mid = steady_step(s);
    const auto& alpha = c.alpha_at(mid);
    const auto& R = c.routing.at(mid);
    const auto hi = find_equilibrium(s.network, e.lambda_hi, alpha, R, s.x0, setup.simulation);
    if (!hi.exists) return std::nullopt;
    const auto lo = find_equilibrium(s.network, e.lambda_lo, alpha, R, s.x0, setup.simulation);
    if (!lo.exists) return std::nullopt;

    const double v = l1_diff(hi.x, lo.x) + l1_diff(e.x0_hi, e.x0_lo) +
                     std::min(l1_diff(lo.x, e.x0_hi) + l1_diff(hi.x, e.x0_hi),
                              l1_diff(lo.x, e.x0_lo) + l1_diff(hi.x, e.x0_lo));
    BoundCurve curve;
    curve.value.assign(s.horizon + 1, v);
    curve.provenance.assign(s.horizon + 1, BoundSource::Prop4);
    return curve;
}

double max_freeflow_inflow(const Scenario& s, const RobustnessSetup& setup, double tol) {
    const int src = single_source(s);
    const ControlSchedule c = effective_controls(s, setup);
    const int mid = steady_step(s);
    const bool fifo = setup.simulation.model != JunctionModel::NonFifo;

    auto admissible = [&](double level) {
        const Scenario sc = constant_inflow(s, src, level);
        if (fifo && !stays_free_flow(sc, c, setup.simulation)) return false;
        std::vector<double> inflow(s.network.size(), 0.0);
        inflow[src] = level;
        return find_equilibrium(s.network, inflow, c.alpha_at(mid), c.routing.at(mid), s.x0, setup.simulation)
            .exists;
    };

    if (!admissible(0.0)) return 0.0;
    double lo = 0.0, hi = std::max(1.0, 2.0 * s.lambda(0, src));
    while (admissible(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9) return kUnbounded;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (admissible(mid) ? lo : hi) = mid;
    }
    return lo;
}

BoundCurve overload_bound(const Scenario& s, const PerturbationSpec& p, const RobustnessSetup& setup,
                          double lambda_hat) {
    const int src = single_source(s);
    PerturbationSpec capped;
    capped.x0 = p.x0;
    capped.inflow.assign(s.horizon, std::vector<double>(s.network.size(), 0.0));
    double excess = 0.0;
    for (int t = 0; t < s.horizon; ++t) {
        capped.inflow[t][src] = lambda_hat;
        const double pt = t < static_cast<int>(p.inflow.size()) ? p.inflow[t][src] : 0.0;
        excess = std::max(excess, std::abs(pt - lambda_hat));
    }
    BoundCurve base = pointwise_min(bound_prop3(s, capped), bound_prop4(s, capped, setup));
    for (int t = 0; t <= s.horizon; ++t) {
        base.value[t] += excess * t;
        base.provenance[t] = BoundSource::Overload;
    }
    base.heuristic = true;
    return base;
}

double lipschitz_constant(const Network& net) {
    double d = 0.0, w = 0.0;
    for (int i = 0; i < net.size(); ++i) {
        d = std::max(d, net.cell(i).diagram.demand_slope);
        if (!net.is_source(i)) w = std::max(w, net.cell(i).diagram.supply_slope);
    }
    return 2.0 * (d + w);
}

BoundCurve sensitivity_bound(const Scenario& s, const PerturbationSpec& p) {
    const double L = lipschitz_constant(s.network);
    const auto dl = inflow_l1_per_step(s, p);
    const double dx = l1_diff(p.x0, s.x0);
    BoundCurve c;
    c.value.assign(s.horizon + 1, 0.0);
    c.provenance.assign(s.horizon + 1, BoundSource::Sensitivity);
    auto grow = [L](double t) { return L > 0 ? (std::exp(L * t) - 1.0) / L : t; };
    const bool constant = std::all_of(dl.begin(), dl.end(), [&](double v) { return v == dl.front(); });
    for (int t = 0; t <= s.horizon; ++t) {
        double v = dx > 0 ? std::exp(L * t) * dx : 0.0;
        if (constant) {
            if (!dl.empty() && dl.front() > 0) v += grow(t) * dl.front();
        } else {
            for (int k = 0; k < t; ++k)
                if (dl[k] > 0) v += (grow(t - k) - grow(t - k - 1)) * dl[k];
        }
        c.value[t] = std::isnan(v) ? kUnbounded : v;
    }
    return c;
}

BoundCurve combined_bound(const Scenario& s, const PerturbationSpec& p, const RobustnessSetup& setup,
                          double lambda_hat) {
    if (s.network.sources().size() == 1) {
        const int src = s.network.sources().front();
        double peak = 0.0;
        for (const auto& row : p.inflow) peak = std::max(peak, row[src]);
        if (lambda_hat < 0) lambda_hat = max_freeflow_inflow(s, setup);
        if (peak > lambda_hat + 1e-12) {
            BoundCurve c = overload_bound(s, p, setup, lambda_hat);
            c.hypothesis_holds = false;
            return c;
        }
    }
    BoundCurve c = pointwise_min(bound_prop3(s, p), bound_prop4(s, p, setup));
    if (setup.simulation.model != JunctionModel::NonFifo) {
        const ControlSchedule ctl = effective_controls(s, setup);
        c.hypothesis_holds = stays_free_flow(apply(s, p), ctl, setup.simulation);
    }
    return c;
}

double cost_perturbation(const Trajectory& perturbed, const Trajectory& nominal) {
    double s = 0.0;
    for (std::size_t t = 0; t < perturbed.x.size() && t < nominal.x.size(); ++t)
        for (std::size_t i = 0; i < perturbed.x[t].size(); ++i) s += perturbed.x[t][i] - nominal.x[t][i];
    return s;
}

std::vector<SweepPoint> robustness_sweep(const Scenario& s, const RobustnessSetup& setup,
                                         const std::vector<double>& deltas, int jobs, bool with_bounds) {
    const ControlSchedule ctl = effective_controls(s, setup);
    const Trajectory nominal = simulate(s, &ctl, setup.simulation);
    double lambda_hat = -1.0;
    if (with_bounds && s.network.sources().size() == 1) lambda_hat = max_freeflow_inflow(s, setup);

    std::vector<SweepPoint> out(deltas.size());
    auto work = [&](std::size_t k) {
        SweepPoint& pt = out[k];
        pt.delta_lambda = deltas[k];
        const PerturbationSpec p = shift_inflow(s, deltas[k]);
        const Trajectory tr = simulate(apply(s, p), &ctl, setup.simulation);
        pt.cost_perturbation = cost_perturbation(tr, nominal);
        pt.min_gamma = tr.min_gamma();
        pt.free_flow = tr.free_flow(1e-9);
        for (const auto& row : tr.x)
            for (double v : row) pt.perturbed_cost += v;
        if (!with_bounds) return;
        const BoundCurve comb = combined_bound(s, p, setup, lambda_hat);
        const BoundCurve p3 = bound_prop3(s, p);
        const BoundCurve sens = sensitivity_bound(s, p);
        pt.combined = comb.sum();
        pt.prop3 = p3.sum();
        pt.sensitivity = sens.sum();
        for (std::size_t t = 1; t < sens.value.size(); ++t)
            if (!(sens.value[t] > comb.value[t])) pt.sensitivity_dominates = false;
        bool has3 = false, has4 = false, over = false;
        for (BoundSource b : comb.provenance) {
            has3 |= b == BoundSource::Prop3;
            has4 |= b == BoundSource::Prop4;
            over |= b == BoundSource::Overload;
        }
        pt.branch = over ? "overload" : has3 && has4 ? "prop3+prop4" : has4 ? "prop4" : "prop3";
    };

    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(deltas.size())));
    if (threads == 1) {
        for (std::size_t k = 0; k < deltas.size(); ++k) work(k);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = next++; k < deltas.size(); k = next++) work(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace ctmflow
