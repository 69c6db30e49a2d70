#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "crag/graph.hpp"

namespace crag::sim {

enum class Tier { Cloud, Fog, Edge, Mobile, Iot, Sensor };

inline std::string to_string(Tier t) {
    switch (t) {
        case Tier::Cloud: return "cloud";
        case Tier::Fog: return "fog";
        case Tier::Edge: return "edge";
        case Tier::Mobile: return "mobile";
        case Tier::Iot: return "iot";
        case Tier::Sensor: return "sensor";
    }
    return "?";
}

inline Tier tier_from_string(const std::string& s) {
    if (s == "cloud") return Tier::Cloud;
    if (s == "fog") return Tier::Fog;
    if (s == "edge") return Tier::Edge;
    if (s == "mobile") return Tier::Mobile;
    if (s == "iot") return Tier::Iot;
    if (s == "sensor") return Tier::Sensor;
    throw ConfigError("nodes[].tier: unknown tier '" + s + "'");
}

struct NodeSpec {
    std::string id;
    Tier tier = Tier::Edge;
    double capacity = 1.0;        // compute units
    double energy = 1.0;          // fraction in [0,1]
    bool mobile = false;
    double link_reliability = 1.0;
};

struct TaskSpec {
    std::string id;
    std::string host;                     // initial host node
    double workload = 1.0;                // compute units
    std::vector<std::string> input_deps;  // node/data identifiers
    std::string mapping;                  // opaque compute-function label
    int deadline = 1;                     // rounds per attempt
    std::vector<std::string> subtasks;
};

// How a sampled bin of a context variable turns into a continuous metric
// value in the emitted logs.
struct MetricSpec {
    std::string id;
    VarKind kind = VarKind::HwContext;
    int arity = 3;
    std::vector<std::pair<double, double>> ranges;  // one [lo,hi) per bin
    int nominal_bin = 0;
    double nominal_value = 0.0;  // healthy operating point, part of the monitoring contract
};

struct IndicatorSpec {
    std::string id;
    std::string severity = "error";
};

// A (possibly scheduled) override of one truth-net variable's distribution.
// Empty node means every node. For fault indicators `p` is the forced
// activation probability; for context variables `bin` receives mass p and the
// rest is spread uniformly. `healed_by` names the action type that clears the
// hazard (with that action's effectiveness probability).
struct Hazard {
    std::string variable;
    std::string node;
    double p = 0.0;
    int bin = -1;  // required for context variables
    int from_round = 0;
    int to_round = -1;  // -1 = open-ended
    std::string healed_by;
};

struct ScenarioConfig {
    std::string name;
    std::vector<NodeSpec> nodes;
    std::vector<std::pair<std::string, std::string>> links;
    std::vector<std::pair<std::string, std::string>> backup_links;
    std::vector<TaskSpec> tasks;
    CausalFaultGraph truth;  // ground-truth net over metrics + indicators
    std::vector<MetricSpec> metrics;
    std::vector<IndicatorSpec> indicators;
    std::vector<Hazard> hazards;

    const NodeSpec* find_node(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }
};

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ConfigError(field + ": " + why);
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
    using detail::require;
    ScenarioConfig sc;
    sc.name = j.value("name", "scenario");

    require(j.contains("nodes") && j["nodes"].is_array() && !j["nodes"].empty(), "nodes",
            "at least one node required");
    std::set<std::string> node_ids;
    for (const auto& nj : j["nodes"]) {
        NodeSpec n;
        n.id = nj.at("id").get<std::string>();
        require(node_ids.insert(n.id).second, "nodes[].id", "duplicate node '" + n.id + "'");
        n.tier = tier_from_string(nj.at("tier").get<std::string>());
        n.capacity = nj.value("capacity", n.tier == Tier::Sensor ? 0.0 : 1.0);
        n.energy = nj.value("energy", 1.0);
        n.mobile = nj.value("mobile", false);
        n.link_reliability = nj.value("link_reliability", 1.0);
        require(n.capacity >= 0.0, "nodes[].capacity", "must be >= 0 ('" + n.id + "')");
        require(n.tier != Tier::Sensor || n.capacity == 0.0, "nodes[].capacity",
                "sensor node '" + n.id + "' must have capacity 0");
        require(n.energy >= 0.0 && n.energy <= 1.0, "nodes[].energy",
                "must be in [0,1] ('" + n.id + "')");
        require(n.link_reliability >= 0.0 && n.link_reliability <= 1.0, "nodes[].link_reliability",
                "must be in [0,1] ('" + n.id + "')");
        sc.nodes.push_back(n);
    }

    auto parse_link_list = [&](const char* key, std::vector<std::pair<std::string, std::string>>& out) {
        if (!j.contains(key)) return;
        for (const auto& lj : j[key]) {
            require(lj.is_array() && lj.size() == 2, key, "each link is a [from,to] pair");
            std::string a = lj[0].get<std::string>(), b = lj[1].get<std::string>();
            require(node_ids.count(a) != 0, key, "unknown node '" + a + "'");
            require(node_ids.count(b) != 0, key, "unknown node '" + b + "'");
            out.emplace_back(a, b);
        }
    };
    parse_link_list("links", sc.links);
    parse_link_list("backup_links", sc.backup_links);

    std::set<std::string> task_ids;
    if (j.contains("tasks")) {
        for (const auto& tj : j["tasks"]) {
            TaskSpec t;
            t.id = tj.at("id").get<std::string>();
            require(task_ids.insert(t.id).second, "tasks[].id", "duplicate task '" + t.id + "'");
            t.host = tj.at("host").get<std::string>();
            require(node_ids.count(t.host) != 0, "tasks[].host",
                    "task '" + t.id + "' references unknown host node '" + t.host + "'");
            t.workload = tj.value("workload", 1.0);
            require(t.workload > 0.0, "tasks[].workload", "must be > 0 ('" + t.id + "')");
            if (tj.contains("input_deps"))
                for (const auto& d : tj["input_deps"]) t.input_deps.push_back(d.get<std::string>());
            t.mapping = tj.value("mapping", "opaque");
            t.deadline = tj.at("deadline").get<int>();
            require(t.deadline > 0, "tasks[].deadline", "must be > 0 ('" + t.id + "')");
            if (tj.contains("subtasks"))
                for (const auto& s : tj["subtasks"]) t.subtasks.push_back(s.get<std::string>());
            require(!t.subtasks.empty(), "tasks[].subtasks", "task '" + t.id + "' needs >= 1 subtask");
            sc.tasks.push_back(t);
        }
    }

    require(j.contains("truth"), "truth", "ground-truth net required");
    const auto& tj = j["truth"];
    require(tj.contains("variables") && tj["variables"].is_array(), "truth.variables", "required");
    for (const auto& vj : tj["variables"]) {
        Variable v;
        v.id = vj.at("id").get<std::string>();
        std::string kind = vj.value("kind", "fault-indicator");
        v.kind = var_kind_from_string(kind);
        if (v.kind == VarKind::FaultIndicator) {
            v.arity = 2;
            IndicatorSpec ind;
            ind.id = v.id;
            ind.severity = vj.value("severity", "error");
            sc.indicators.push_back(ind);
        } else {
            v.arity = vj.value("arity", 3);
            MetricSpec m;
            m.id = v.id;
            m.kind = v.kind;
            m.arity = v.arity;
            m.nominal_bin = vj.value("nominal_bin", 0);
            require(m.nominal_bin >= 0 && m.nominal_bin < m.arity, "truth.variables[].nominal_bin",
                    "out of range for '" + v.id + "'");
            require(vj.contains("ranges"), "truth.variables[].ranges",
                    "context variable '" + v.id + "' needs per-bin value ranges");
            for (const auto& rj : vj["ranges"]) {
                require(rj.is_array() && rj.size() == 2, "truth.variables[].ranges", "each range is [lo,hi]");
                m.ranges.emplace_back(rj[0].get<double>(), rj[1].get<double>());
            }
            require(static_cast<int>(m.ranges.size()) == m.arity, "truth.variables[].ranges",
                    "'" + v.id + "' needs one range per bin");
            m.nominal_value = vj.value(
                "nominal_value", 0.5 * (m.ranges[m.nominal_bin].first + m.ranges[m.nominal_bin].second));
            sc.metrics.push_back(m);
        }
        sc.truth.add_variable(v);
    }
    if (tj.contains("edges")) {
        for (const auto& ej : tj["edges"]) {
            require(ej.is_array() && ej.size() == 2, "truth.edges", "each edge is a [from,to] pair");
            std::string a = ej[0].get<std::string>(), b = ej[1].get<std::string>();
            require(sc.truth.has_variable(a), "truth.edges", "unknown variable '" + a + "'");
            require(sc.truth.has_variable(b), "truth.edges", "unknown variable '" + b + "'");
            sc.truth.add_edge(sc.truth.index_of(a), sc.truth.index_of(b));
        }
    }
    require(tj.contains("cpts"), "truth.cpts", "required");
    for (int v = 0; v < sc.truth.num_vars(); ++v) {
        const std::string& id = sc.truth.var(v).id;
        require(tj["cpts"].contains(id), "truth.cpts", "missing cpt for '" + id + "'");
        const auto& rows = tj["cpts"][id];
        require(rows.is_array() && static_cast<int>(rows.size()) == sc.truth.parent_config_count(v),
                "truth.cpts", "'" + id + "' needs one row per parent configuration");
        std::vector<double> table;
        for (const auto& row : rows) {
            require(row.is_array() && static_cast<int>(row.size()) == sc.truth.var(v).arity,
                    "truth.cpts", "'" + id + "' row has wrong length");
            for (const auto& x : row) table.push_back(x.get<double>());
        }
        sc.truth.set_cpt(v, table);
    }
    try {
        sc.truth.validate_cpts(1e-12);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("truth.cpts: ") + e.what());
    }

    if (j.contains("hazards")) {
        for (const auto& hj : j["hazards"]) {
            Hazard h;
            h.variable = hj.at("variable").get<std::string>();
            require(sc.truth.has_variable(h.variable), "hazards[].variable",
                    "unknown variable '" + h.variable + "'");
            const Variable& hv = sc.truth.var(sc.truth.index_of(h.variable));
            h.node = hj.value("node", "");
            require(h.node.empty() || node_ids.count(h.node) != 0, "hazards[].node",
                    "unknown node '" + h.node + "'");
            h.p = hj.at("p").get<double>();
            require(h.p >= 0.0 && h.p <= 1.0, "hazards[].p", "must be in [0,1]");
            h.bin = hj.value("bin", -1);
            if (hv.kind == VarKind::FaultIndicator)
                require(h.bin == -1, "hazards[].bin", "indicator hazards use p only");
            else
                require(h.bin >= 0 && h.bin < hv.arity, "hazards[].bin",
                        "context hazard on '" + h.variable + "' needs a bin in range");
            h.from_round = hj.value("from_round", 0);
            h.to_round = hj.value("to_round", -1);
            h.healed_by = hj.value("healed_by", "");
            sc.hazards.push_back(h);
        }
    }
    return sc;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("scenario: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("scenario: invalid json in '" + path + "': " + e.what());
    }
    return parse_scenario(j);
}

}  // namespace crag::sim
