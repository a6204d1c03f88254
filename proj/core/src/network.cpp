#include "ctmflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ctmflow/errors.hpp"

namespace ctmflow {

double FundamentalDiagram::capacity(int t) const {
    if (capacity_schedule.empty()) return kInfiniteSupply;
    if (t < 0) t = 0;
    const auto n = static_cast<int>(capacity_schedule.size());
    return capacity_schedule[std::min(t, n - 1)];
}

const char* to_string(JunctionKind k) {
    switch (k) {
        case JunctionKind::Ordinary: return "ordinary";
        case JunctionKind::Merge: return "merge";
        case JunctionKind::Diverge: return "diverge";
        case JunctionKind::General: return "general";
    }
    return "?";
}

Cell make_cell(int id, double v, double w, double L, int lanes, double jam,
               std::vector<double> capacity, double tau) {
    Cell c;
    c.id = id;
    c.v = v;
    c.w = w;
    c.L = L;
    c.lanes = lanes;
    c.diagram.demand_slope = L > 0 ? v * tau / L : 0.0;
    c.diagram.supply_slope = L > 0 ? w * tau / L : 0.0;
    c.diagram.jam_volume = jam;
    c.diagram.capacity_schedule = std::move(capacity);
    return c;
}

Network::Network(std::vector<Cell> cells, const std::vector<std::pair<int, int>>& adjacency,
                 const std::vector<int>& sources, const std::vector<int>& sinks)
    : cells_(std::move(cells)) {
    const int n = size();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < i; ++k)
            if (cells_[i].id == cells_[k].id)
                throw ConfigError("duplicate cell id " + std::to_string(cells_[i].id));

    out_.assign(n, {});
    in_.assign(n, {});
    source_flag_.assign(n, false);
    sink_flag_.assign(n, false);

    auto lookup = [&](int id, const char* what) {
        const int idx = index_of(id);
        if (idx < 0) throw ConfigError(std::string(what) + " references unknown cell " + std::to_string(id));
        return idx;
    };

    for (const auto& [a, b] : adjacency) {
        const int i = lookup(a, "adjacency");
        const int j = lookup(b, "adjacency");
        if (pair_index(i, j) >= 0)
            throw ConfigError("duplicate adjacency pair (" + std::to_string(a) + "," + std::to_string(b) + ")");
        const int p = static_cast<int>(pairs_.size());
        pairs_.push_back({i, j});
        out_[i].push_back(p);
        in_[j].push_back(p);
    }
    for (int id : sources) {
        const int i = lookup(id, "sources");
        if (!source_flag_[i]) sources_.push_back(i);
        source_flag_[i] = true;
    }
    for (int id : sinks) {
        const int i = lookup(id, "sinks");
        if (!sink_flag_[i]) sinks_.push_back(i);
        sink_flag_[i] = true;
    }
    for (int i = 0; i < n; ++i) cells_[i].diagram.is_source = source_flag_[i];
}

int Network::index_of(int id) const {
    for (int i = 0; i < size(); ++i)
        if (cells_[i].id == id) return i;
    return -1;
}

int Network::pair_index(int i, int j) const {
    if (i < 0 || i >= size()) return -1;
    for (int p : out_[i])
        if (pairs_[p].to == j) return p;
    return -1;
}

const std::vector<double>& RoutingSchedule::at(int t) const {
    if (steps.empty()) throw ConfigError("empty routing schedule");
    const auto n = static_cast<int>(steps.size());
    return steps[std::clamp(t, 0, n - 1)];
}

bool RoutingSchedule::is_constant() const {
    for (const auto& s : steps)
        if (s != steps.front()) return false;
    return true;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << v.rule;
        if (v.cell >= 0) os << " cell=" << v.cell;
        if (v.step >= 0) os << " step=" << v.step;
        os << ": " << v.message << '\n';
    }
    return os.str();
}

namespace {

void add(ValidationReport& r, std::string rule, int cell, int step, std::string msg) {
    r.violations.push_back({std::move(rule), cell, step, std::move(msg)});
}

// Union-find over cell endpoints: tail node = 2i, head node = 2i+1.
struct NodeSets {
    std::vector<int> parent;
    explicit NodeSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

ValidationReport validate(const Network& net) {
    ValidationReport r;
    for (int i = 0; i < net.size(); ++i) {
        const Cell& c = net.cell(i);
        const auto& d = c.diagram;
        if (!(c.v > 0)) add(r, "cell-speed", c.id, -1, "free-flow speed must be positive");
        if (!(c.w > 0)) add(r, "cell-wave-speed", c.id, -1, "wave speed must be positive");
        if (!(c.L > 0)) add(r, "cell-length", c.id, -1, "length must be positive");
        if (c.lanes < 1) add(r, "cell-lanes", c.id, -1, "lane count must be at least 1");
        if (!(d.jam_volume > 0)) add(r, "jam-volume", c.id, -1, "jam volume must be positive");
        if (!(d.demand_slope >= 0)) add(r, "demand-slope", c.id, -1, "demand slope must be nonnegative");
        if (!(d.supply_slope >= 0)) add(r, "supply-slope", c.id, -1, "supply slope must be nonnegative");
        if (d.capacity_schedule.empty()) add(r, "capacity", c.id, -1, "capacity schedule is empty");
        for (std::size_t t = 0; t < d.capacity_schedule.size(); ++t)
            if (!(d.capacity_schedule[t] >= 0))
                add(r, "capacity", c.id, static_cast<int>(t), "capacity must be nonnegative");
        if (!net.is_source(i) && d.jam_volume > 0 && d.supply_slope > 0 && !d.capacity_schedule.empty()) {
            // s(0) > 0 for non-sources, at every step where capacity is positive somewhere
            bool any_positive = false;
            for (double cap : d.capacity_schedule) any_positive = any_positive || cap > 0;
            if (!any_positive) add(r, "supply-at-zero", c.id, -1, "supply is identically zero");
        }
        if (net.is_source(i) && !net.in_pairs(i).empty())
            add(r, "source-upstream", c.id, -1, "source has an in-network upstream cell");
        if (net.is_sink(i) && !net.out_pairs(i).empty())
            add(r, "sink-downstream", c.id, -1, "sink has an in-network downstream cell");
        if (!net.is_sink(i) && net.out_pairs(i).empty())
            add(r, "dead-end", c.id, -1, "non-sink cell has no downstream cell");
    }
    for (const auto& p : net.pairs())
        if (p.from == p.to)
            add(r, "self-loop", net.cell(p.from).id, -1, "cell adjacent to itself");
    if (net.sources().empty()) add(r, "sources", -1, -1, "network has no source");
    if (net.sinks().empty()) add(r, "sinks", -1, -1, "network has no sink");
    return r;
}

ValidationReport validate(const Scenario& s) {
    ValidationReport r = validate(s.network);
    const Network& net = s.network;
    const int n = net.size();
    if (s.horizon < 1) add(r, "horizon", -1, -1, "T must be at least 1");
    if (!(s.tau > 0)) add(r, "tau", -1, -1, "sampling period must be positive");

    if (static_cast<int>(s.x0.size()) != n) {
        add(r, "x0-shape", -1, -1, "x0 has " + std::to_string(s.x0.size()) + " entries, expected " + std::to_string(n));
    } else {
        for (int i = 0; i < n; ++i) {
            if (!(s.x0[i] >= 0)) add(r, "x0-negative", net.cell(i).id, 0, "initial volume is negative");
            if (!net.is_source(i) && s.x0[i] > net.cell(i).diagram.jam_volume)
                add(r, "x0-jam", net.cell(i).id, 0, "initial volume exceeds jam volume");
        }
    }
    for (std::size_t t = 0; t < s.inflow.size(); ++t) {
        if (static_cast<int>(s.inflow[t].size()) != n) {
            add(r, "inflow-shape", -1, static_cast<int>(t), "inflow row has wrong length");
            continue;
        }
        for (int i = 0; i < n; ++i) {
            const double l = s.inflow[t][i];
            if (!(l >= 0)) add(r, "inflow-negative", net.cell(i).id, static_cast<int>(t), "inflow is negative");
            if (l != 0 && !net.is_source(i))
                add(r, "inflow-non-source", net.cell(i).id, static_cast<int>(t), "inflow on a non-source cell");
        }
    }

    double vmax = 0, lmin = kInfiniteSupply;
    for (const auto& c : net.cells()) {
        vmax = std::max(vmax, c.v);
        lmin = std::min(lmin, c.L);
    }
    if (n > 0 && lmin > 0) {
        const double cfl = s.tau * vmax / lmin;
        if (cfl > 1.0 + 1e-12)
            add(r, "cfl", -1, -1, "CFL ratio tau*max(v)/min(L) = " + std::to_string(cfl) + " exceeds 1");
    }

    if (s.routing) {
        const auto& R = *s.routing;
        for (std::size_t t = 0; t < R.steps.size(); ++t) {
            const auto& row = R.steps[t];
            if (static_cast<int>(row.size()) != net.pair_count()) {
                add(r, "routing-shape", -1, static_cast<int>(t), "routing step has wrong length");
                continue;
            }
            for (int p = 0; p < net.pair_count(); ++p)
                if (!(row[p] >= 0))
                    add(r, "routing-negative", net.cell(net.pair(p).from).id, static_cast<int>(t),
                        "negative turning ratio");
            for (int i = 0; i < n; ++i) {
                if (net.is_sink(i)) continue;
                double sum = 0;
                for (int p : net.out_pairs(i)) sum += row[p];
                if (std::abs(sum - 1.0) > 1e-9) {
                    std::ostringstream os;
                    os << "turning ratios sum to " << sum << ", expected 1";
                    add(r, "routing-row-sum", net.cell(i).id, static_cast<int>(t), os.str());
                }
            }
        }
    }
    return r;
}

double demand(const Cell& cell, double x, double alpha, int t) {
    if (x < 0) throw ConfigError("demand: negative volume at cell " + std::to_string(cell.id));
    const auto& d = cell.diagram;
    if (d.is_source) return std::min(d.free_demand(x), alpha * d.capacity(t));
    return std::min(alpha * d.free_demand(x), d.capacity(t));
}

double supply(const Cell& cell, double x, int t) {
    const auto& d = cell.diagram;
    if (d.is_source) return kInfiniteSupply;
    if (x > d.jam_volume * (1 + 1e-12) + 1e-12)
        throw ConfigError("supply: volume above jam at cell " + std::to_string(cell.id));
    return std::max(0.0, std::min(d.supply_slope * (d.jam_volume - x), d.capacity(t)));
}

std::vector<Junction> classify_junctions(const Network& net) {
    const int n = net.size();
    NodeSets sets(2 * n);
    for (const auto& p : net.pairs()) sets.unite(2 * p.from + 1, 2 * p.to);

    std::unordered_map<int, int> node_of_root;
    std::vector<Junction> out;
    auto node = [&](int endpoint) {
        const int root = sets.find(endpoint);
        auto [it, inserted] = node_of_root.emplace(root, static_cast<int>(out.size()));
        if (inserted) out.emplace_back();
        return it->second;
    };
    for (const auto& p : net.pairs()) {
        Junction& j = out[node(2 * p.from + 1)];
        if (std::find(j.in.begin(), j.in.end(), p.from) == j.in.end()) j.in.push_back(p.from);
        if (std::find(j.out.begin(), j.out.end(), p.to) == j.out.end()) j.out.push_back(p.to);
    }
    for (auto& j : out) {
        std::sort(j.in.begin(), j.in.end());
        std::sort(j.out.begin(), j.out.end());
        const bool multi_in = j.in.size() > 1, multi_out = j.out.size() > 1;
        j.kind = multi_in && multi_out ? JunctionKind::General
                 : multi_in            ? JunctionKind::Merge
                 : multi_out           ? JunctionKind::Diverge
                                       : JunctionKind::Ordinary;
    }
    return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
    auto h = seed;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < size; ++k) {
        h ^= p[k];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& text) { return fnv1a64(text.data(), text.size()); }

std::uint64_t scenario_hash(const Scenario& s) {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](double v) { h = fnv1a64(&v, sizeof v, h); };
    auto mixi = [&h](long v) { h = fnv1a64(&v, sizeof v, h); };
    const Network& net = s.network;
    mixi(net.size());
    for (const auto& c : net.cells()) {
        mixi(c.id);
        mix(c.v); mix(c.w); mix(c.L); mixi(c.lanes);
        mix(c.diagram.demand_slope); mix(c.diagram.supply_slope); mix(c.diagram.jam_volume);
        for (double cap : c.diagram.capacity_schedule) mix(cap);
        mixi(c.diagram.is_source);
    }
    for (const auto& p : net.pairs()) { mixi(p.from); mixi(p.to); }
    for (int i : net.sinks()) mixi(i);
    mixi(s.horizon); mix(s.tau);
    for (double v : s.x0) mix(v);
    for (const auto& row : s.inflow) for (double v : row) mix(v);
    if (s.routing) for (const auto& row : s.routing->steps) for (double v : row) mix(v);
    return h;
}

}  // namespace ctmflow
