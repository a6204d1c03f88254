#include "ctmflow/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "ctmflow/errors.hpp"
#include "json.hpp"

namespace ctmflow {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("scenario: missing field '") + key + "'");
    return j.at(key);
}

const json& array_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_array()) throw ConfigError(std::string("scenario: field '") + key + "' must be an array");
    return v;
}

std::pair<int, int> parse_pair_key(const std::string& key) {
    std::string s;
    for (char c : key)
        if (c != '(' && c != ')' && c != ' ' && c != '[' && c != ']') s += c;
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("scenario: routing key '" + key + "' is not 'i,j'");
    try {
        return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ConfigError("scenario: routing key '" + key + "' is not 'i,j'");
    }
}

std::vector<double> numbers(const json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array()) throw ConfigError("scenario: '" + what + "' must be a number or an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError("scenario: '" + what + "' has a non-numeric entry");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: JSON parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("scenario: top level must be an object");
    if (!doc.contains("units") || !doc["units"].is_object())
        throw ConfigError("scenario: missing required 'units' header");

    try {
        Scenario s;
        s.tau = field(doc, "tau").get<double>();
        s.horizon = field(doc, "T").get<int>();
        if (doc.contains("description")) s.description = doc["description"].get<std::string>();

        std::vector<Cell> cells;
        for (const auto& c : array_field(doc, "cells")) {
            if (!c.is_object()) throw ConfigError("scenario: entries of 'cells' must be objects");
            const int id = field(c, "id").get<int>();
            auto cap = numbers(field(c, "capacity"), "capacity");
            cells.push_back(make_cell(id, field(c, "v").get<double>(), field(c, "w").get<double>(),
                                      field(c, "L").get<double>(), c.value("lanes", 1),
                                      field(c, "jam").get<double>(), std::move(cap), s.tau));
        }
        std::vector<std::pair<int, int>> adjacency;
        for (const auto& p : array_field(doc, "adjacency")) {
            if (!p.is_array() || p.size() != 2) throw ConfigError("scenario: adjacency entries must be [i, j]");
            adjacency.emplace_back(p[0].get<int>(), p[1].get<int>());
        }
        const auto sources = field(doc, "sources").get<std::vector<int>>();
        const auto sinks = field(doc, "sinks").get<std::vector<int>>();
        s.network = Network(std::move(cells), adjacency, sources, sinks);
        const Network& net = s.network;
        const int n = net.size();

        s.x0.assign(n, 0.0);
        if (doc.contains("x0")) {
            const auto x0 = numbers(doc["x0"], "x0");
            if (static_cast<int>(x0.size()) != n)
                throw ConfigError("scenario: x0 has " + std::to_string(x0.size()) + " entries, expected " +
                                  std::to_string(n));
            s.x0 = x0;
        }

        s.inflow.assign(s.horizon, std::vector<double>(n, 0.0));
        if (doc.contains("inflow")) {
            for (const auto& [key, val] : doc["inflow"].items()) {
                const int idx = net.index_of(std::stoi(key));
                if (idx < 0) throw ConfigError("scenario: inflow references unknown cell " + key);
                if (val.is_object()) {
                    const double c = field(val, "constant").get<double>();
                    for (int t = 0; t < s.horizon; ++t) s.inflow[t][idx] = c;
                } else {
                    const auto series = numbers(val, "inflow");
                    for (int t = 0; t < s.horizon && t < static_cast<int>(series.size()); ++t)
                        s.inflow[t][idx] = series[t];
                }
            }
        }

        if (doc.contains("routing") && !doc["routing"].is_null()) {
            std::size_t steps = 1;
            std::vector<std::pair<int, std::vector<double>>> entries;
            for (const auto& [key, val] : doc["routing"].items()) {
                const auto [a, b] = parse_pair_key(key);
                const int p = net.pair_index(net.index_of(a), net.index_of(b));
                if (p < 0) throw ConfigError("scenario: routing key '" + key + "' is not an adjacency pair");
                auto series = numbers(val, "routing");
                if (series.empty()) throw ConfigError("scenario: routing '" + key + "' is empty");
                steps = std::max(steps, series.size());
                entries.emplace_back(p, std::move(series));
            }
            RoutingSchedule R;
            R.steps.assign(steps, std::vector<double>(net.pair_count(), 0.0));
            std::vector<bool> given(net.pair_count(), false);
            for (const auto& [p, series] : entries) {
                given[p] = true;
                for (std::size_t t = 0; t < steps; ++t) R.steps[t][p] = series[std::min(t, series.size() - 1)];
            }
            for (int i = 0; i < n; ++i)
                if (net.out_pairs(i).size() == 1 && !given[net.out_pairs(i)[0]])
                    for (auto& row : R.steps) row[net.out_pairs(i)[0]] = 1.0;
            s.routing = std::move(R);
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    } catch (const std::logic_error& e) {
        throw ConfigError(std::string("scenario: bad numeric key: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_scenario(os.str());
}

std::string scenario_to_json(const Scenario& s) {
    const Network& net = s.network;
    json doc;
    doc["units"] = {{"length", "ft"}, {"time", "s"}, {"volume", "veh"}, {"flow", "veh/step"}};
    if (!s.description.empty()) doc["description"] = s.description;
    doc["tau"] = s.tau;
    doc["T"] = s.horizon;
    doc["cells"] = json::array();
    for (const auto& c : net.cells())
        doc["cells"].push_back({{"id", c.id}, {"v", c.v}, {"w", c.w}, {"L", c.L}, {"lanes", c.lanes},
                                {"jam", c.diagram.jam_volume}, {"capacity", c.diagram.capacity_schedule}});
    doc["adjacency"] = json::array();
    for (const auto& p : net.pairs()) doc["adjacency"].push_back({net.cell(p.from).id, net.cell(p.to).id});
    std::vector<int> src, snk;
    for (int i : net.sources()) src.push_back(net.cell(i).id);
    for (int i : net.sinks()) snk.push_back(net.cell(i).id);
    doc["sources"] = src;
    doc["sinks"] = snk;
    doc["x0"] = s.x0;
    doc["inflow"] = json::object();
    for (int i : net.sources()) {
        std::vector<double> series;
        for (int t = 0; t < s.horizon; ++t) series.push_back(s.lambda(t, i));
        doc["inflow"][std::to_string(net.cell(i).id)] = series;
    }
    if (s.routing) {
        doc["routing"] = json::object();
        for (int p = 0; p < net.pair_count(); ++p) {
            std::vector<double> series;
            for (const auto& row : s.routing->steps) series.push_back(row[p]);
            const auto& pr = net.pair(p);
            doc["routing"][std::to_string(net.cell(pr.from).id) + "," + std::to_string(net.cell(pr.to).id)] = series;
        }
    }
    return doc.dump(2);
}

}  // namespace ctmflow
