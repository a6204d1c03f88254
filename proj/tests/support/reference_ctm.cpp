#include "reference_ctm.hpp"

#include <algorithm>
#include <limits>

namespace ctmflow::testkit {

namespace {

double ref_demand(const FundamentalDiagram& d, double x, double a, int t) {
    const auto& c = d.capacity_schedule;
    const double cap = c[std::min<std::size_t>(t, c.size() - 1)];
    return d.is_source ? std::min(d.demand_slope * x, a * cap) : std::min(a * d.demand_slope * x, cap);
}

double ref_supply(const FundamentalDiagram& d, double x, int t) {
    if (d.is_source) return std::numeric_limits<double>::infinity();
    const auto& c = d.capacity_schedule;
    const double cap = c[std::min<std::size_t>(t, c.size() - 1)];
    return std::min(d.supply_slope * (d.jam_volume - x), cap);
}

}  // namespace

ReferenceStep reference_rates(const Scenario& s, const std::vector<double>& x,
                              const std::vector<double>& alpha, int t, bool fifo) {
    const Network& net = s.network;
    const int n = net.size();
    std::vector<std::vector<double>> R(n, std::vector<double>(n, 0.0));
    const auto& row = s.routing->at(t);
    for (int p = 0; p < net.pair_count(); ++p) R[net.pair(p).from][net.pair(p).to] = row[p];

    std::vector<double> dbar(n), sup(n);
    for (int i = 0; i < n; ++i) {
        dbar[i] = ref_demand(net.cell(i).diagram, x[i], alpha[i], t);
        sup[i] = ref_supply(net.cell(i).diagram, x[i], t);
    }
    // ratio[j]: fraction of the requests into j that j can take
    std::vector<double> ratio(n, 1.0);
    for (int j = 0; j < n; ++j) {
        double req = 0.0;
        for (int i = 0; i < n; ++i) req += R[i][j] * dbar[i];
        if (req > 0.0) ratio[j] = std::min(1.0, sup[j] / req);
    }
    ReferenceStep out;
    out.f.assign(n, std::vector<double>(n, 0.0));
    out.y.assign(n, 0.0);
    out.z.assign(n, 0.0);
    out.mu.assign(n, 0.0);
    out.gamma.assign(n, 1.0);
    for (int i = 0; i < n; ++i) {
        if (net.is_sink(i)) {
            out.z[i] = out.mu[i] = dbar[i];
            continue;
        }
        double g = 1.0;
        for (int j = 0; j < n; ++j)
            if (R[i][j] > 0.0) g = std::min(g, ratio[j]);
        if (dbar[i] <= 1e-12) g = 1.0;
        out.gamma[i] = g;
        for (int j = 0; j < n; ++j) {
            if (R[i][j] <= 0.0) continue;
            out.f[i][j] = (fifo ? g : ratio[j]) * R[i][j] * dbar[i];
            out.z[i] += out.f[i][j];
            out.y[j] += out.f[i][j];
        }
    }
    for (int i = 0; i < n; ++i) out.y[i] += s.lambda(t, i);
    return out;
}

std::vector<std::vector<double>> reference_simulate(const Scenario& s, bool fifo) {
    std::vector<std::vector<double>> xs{s.x0};
    const std::vector<double> ones(s.network.size(), 1.0);
    for (int t = 0; t < s.horizon; ++t) {
        const auto r = reference_rates(s, xs.back(), ones, t, fifo);
        std::vector<double> next(xs.back());
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += r.y[i] - r.z[i];
        xs.push_back(std::move(next));
    }
    return xs;
}

}  // namespace ctmflow::testkit
