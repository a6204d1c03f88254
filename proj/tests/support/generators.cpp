#include "generators.hpp"

#include <algorithm>

namespace ctmflow::testkit {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

Scenario random_scenario(std::mt19937_64& rng, const GeneratorOptions& opt) {
    const int n = uniform_int(rng, opt.min_cells, opt.max_cells);
    // Index order is a topological order: cell 0 is the source, cell n-1 the sink.
    std::vector<std::pair<int, int>> adj;
    auto has = [&](int a, int b) { return std::find(adj.begin(), adj.end(), std::pair{a, b}) != adj.end(); };
    for (int k = 0; k + 1 < n; ++k) {
        const int lo = k + 1;
        const int hi = k == 0 ? std::max(1, n - 2) : n - 1;
        adj.emplace_back(k, uniform_int(rng, lo, hi));
    }
    for (int k = 1; k < n; ++k) {
        bool fed = false;
        for (const auto& e : adj) fed |= e.second == k;
        if (!fed) adj.emplace_back(uniform_int(rng, 0, k - 1), k);
    }
    if (opt.allow_merges) {
        const int extra = uniform_int(rng, 0, n / 2);
        for (int e = 0; e < extra; ++e) {
            const int a = uniform_int(rng, 0, n - 2);
            const int b = uniform_int(rng, a + 1, n - 1);
            if (has(a, b)) continue;
            adj.emplace_back(a, b);
        }
    }

    std::vector<Cell> cells;
    for (int i = 0; i < n; ++i) {
        const double dv = uniform(rng, 0.2, std::min(1.0, opt.max_slope_sum - 0.1));
        const double dw = uniform(rng, 0.1, std::min(1.0, opt.max_slope_sum - dv));
        const double jam = uniform(rng, 5.0, 20.0);
        std::vector<double> cap;
        const int pieces = uniform_int(rng, 1, 3);
        for (int k = 0; k < pieces; ++k) cap.push_back(uniform(rng, 0.5, 0.6 * jam));
        cells.push_back(make_cell(i + 1, dv, dw, 1.0, 1, jam, cap, 1.0));
    }
    std::vector<std::pair<int, int>> ids;
    for (const auto& [a, b] : adj) ids.emplace_back(a + 1, b + 1);

    Scenario s;
    s.network = Network(std::move(cells), ids, {1}, {n});
    s.tau = 1.0;
    s.horizon = opt.horizon;
    const Network& net = s.network;
    s.x0.assign(n, 0.0);
    for (int i = 0; i < n; ++i) s.x0[i] = uniform(rng, 0.0, opt.x0_fill * net.cell(i).diagram.jam_volume);
    s.inflow.assign(s.horizon, std::vector<double>(n, 0.0));
    for (int t = 0; t < s.horizon; ++t) s.inflow[t][net.index_of(1)] = uniform(rng, 0.0, opt.max_inflow);
    if (opt.with_routing) {
        RoutingSchedule R;
        R.steps.assign(1, std::vector<double>(net.pair_count(), 0.0));
        for (int i = 0; i < n; ++i) {
            const auto& outs = net.out_pairs(i);
            double total = 0.0;
            std::vector<double> w;
            for (std::size_t k = 0; k < outs.size(); ++k) {
                w.push_back(uniform(rng, 0.1, 1.0));
                total += w.back();
            }
            for (std::size_t k = 0; k < outs.size(); ++k) R.steps[0][outs[k]] = w[k] / total;
        }
        s.routing = R;
    }
    return s;
}

Scenario dominating_scenario(const Scenario& s, std::mt19937_64& rng, double max_dx, double max_dlambda) {
    Scenario out = s;
    for (int i = 0; i < s.network.size(); ++i) {
        const double room = s.network.is_source(i) ? max_dx : s.network.cell(i).diagram.jam_volume - s.x0[i];
        out.x0[i] += uniform(rng, 0.0, std::max(0.0, std::min(max_dx, room)));
    }
    for (auto& row : out.inflow)
        for (int i : s.network.sources()) row[i] += uniform(rng, 0.0, max_dlambda);
    return out;
}

Scenario chain_scenario(int n, int horizon, double inflow, double capacity, double jam) {
    std::vector<Cell> cells;
    std::vector<std::pair<int, int>> adj;
    for (int i = 1; i <= n; ++i) {
        cells.push_back(make_cell(i, 50, 50, 500, 1, jam, {capacity}, 10));
        if (i > 1) adj.emplace_back(i - 1, i);
    }
    Scenario s;
    s.network = Network(std::move(cells), adj, {1}, {n});
    s.tau = 10;
    s.horizon = horizon;
    s.x0.assign(n, 0.0);
    s.inflow.assign(horizon, std::vector<double>(n, 0.0));
    for (auto& row : s.inflow) row[0] = inflow;
    RoutingSchedule R;
    R.steps.assign(1, std::vector<double>(s.network.pair_count(), 1.0));
    s.routing = R;
    return s;
}

Scenario bundled(const std::string& name) { return load_scenario(std::string(CTMFLOW_SCENARIO_DIR) + "/" + name); }

}  // namespace ctmflow::testkit
