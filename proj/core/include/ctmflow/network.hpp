#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ctmflow {

/// Supply of a source cell. Never replaced by a large finite number.
inline constexpr double kInfiniteSupply = std::numeric_limits<double>::infinity();

/// Piecewise-affine fundamental diagram in per-step units (veh/step).
struct FundamentalDiagram {
    double demand_slope = 1.0;   ///< v*tau/L
    double supply_slope = 1.0;   ///< w*tau/L
    double jam_volume = 1.0;     ///< veh
    std::vector<double> capacity_schedule;  ///< C(t), constant-extended past its end
    bool is_source = false;

    double capacity(int t) const;
    /// Uncapped demand d(x) = slope * x.
    double free_demand(double x) const { return demand_slope * x; }
};

struct Cell {
    int id = 0;
    double v = 0.0;  ///< free-flow speed, length/time
    double w = 0.0;  ///< congestion wave speed, length/time
    double L = 0.0;  ///< cell length
    int lanes = 1;
    FundamentalDiagram diagram;
};

/// Ordered pair of adjacent cells, by internal index.
struct CellPair {
    int from = 0;
    int to = 0;
};

enum class JunctionKind { Ordinary, Merge, Diverge, General };

const char* to_string(JunctionKind k);

/// Internal node between cells: all cells in `in` flow into all cells in `out`.
struct Junction {
    std::vector<int> in;
    std::vector<int> out;
    JunctionKind kind = JunctionKind::Ordinary;
};

/// Cell graph. Cells are addressed by internal index 0..n-1; `Cell::id` is the external label.
class Network {
public:
    Network() = default;

    /// `adjacency`, `sources`, `sinks` use external cell ids.
    /// Throws ConfigError on unknown or duplicate ids; all other checks live in validate().
    Network(std::vector<Cell> cells,
            const std::vector<std::pair<int, int>>& adjacency,
            const std::vector<int>& sources,
            const std::vector<int>& sinks);

    int size() const { return static_cast<int>(cells_.size()); }
    int pair_count() const { return static_cast<int>(pairs_.size()); }

    const std::vector<Cell>& cells() const { return cells_; }
    const Cell& cell(int i) const { return cells_[i]; }
    const std::vector<CellPair>& pairs() const { return pairs_; }
    const CellPair& pair(int p) const { return pairs_[p]; }

    /// Pair indices leaving / entering cell i.
    const std::vector<int>& out_pairs(int i) const { return out_[i]; }
    const std::vector<int>& in_pairs(int i) const { return in_[i]; }

    bool is_source(int i) const { return source_flag_[i]; }
    bool is_sink(int i) const { return sink_flag_[i]; }
    const std::vector<int>& sources() const { return sources_; }
    const std::vector<int>& sinks() const { return sinks_; }

    /// Internal index for an external id, or -1.
    int index_of(int id) const;
    /// Pair index for internal indices (i,j), or -1.
    int pair_index(int i, int j) const;

private:
    std::vector<Cell> cells_;
    std::vector<CellPair> pairs_;
    std::vector<std::vector<int>> out_;
    std::vector<std::vector<int>> in_;
    std::vector<int> sources_;
    std::vector<int> sinks_;
    std::vector<bool> source_flag_;
    std::vector<bool> sink_flag_;
};

/// Per-step turning ratios, one entry per adjacent pair.
struct RoutingSchedule {
    std::vector<std::vector<double>> steps;  ///< steps[t][pair]

    bool empty() const { return steps.empty(); }
    /// R(t), constant-extending the last entry.
    const std::vector<double>& at(int t) const;
    /// True if every step equals the first one.
    bool is_constant() const;
};

struct Scenario {
    Network network;
    int horizon = 0;        ///< T, number of steps
    double tau = 1.0;       ///< seconds per step
    std::vector<double> x0;                     ///< veh per cell
    std::vector<std::vector<double>> inflow;    ///< inflow[t][cell], t in 0..T-1
    std::optional<RoutingSchedule> routing;     ///< exogenous turning ratios
    std::string description;

    double lambda(int t, int i) const {
        return t < static_cast<int>(inflow.size()) ? inflow[t][i] : 0.0;
    }
};

struct Violation {
    std::string rule;   ///< short identifier, e.g. "routing-row-sum"
    int cell = -1;      ///< external id, -1 if not cell-specific
    int step = -1;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Cell whose diagram slopes are derived from physical parameters (v*tau/L, w*tau/L).
Cell make_cell(int id, double v, double w, double L, int lanes, double jam,
               std::vector<double> capacity, double tau);

ValidationReport validate(const Network& network);
ValidationReport validate(const Scenario& scenario);

/// Demand: min{alpha*d(x), C(t)} for non-sources, min{d(x), alpha*C(t)} for sources.
double demand(const Cell& cell, double x, double alpha, int t);
/// Supply: min{w'(jam-x), C(t)}; infinite for sources.
double supply(const Cell& cell, double x, int t);

/// Internal nodes with their in/out cells and kind.
std::vector<Junction> classify_junctions(const Network& network);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t fnv1a64(const std::string& text);
/// Hash of the scenario content (structure, parameters, schedules).
std::uint64_t scenario_hash(const Scenario& scenario);

}  // namespace ctmflow
