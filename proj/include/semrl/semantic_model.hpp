// Copyright 2026 The semrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include "semrl/error.hpp"
#include "semrl/format.hpp"

namespace semrl {

enum class ValueKind { categorical, numerical };

inline const char* to_string(ValueKind k) {
    return k == ValueKind::numerical ? "numerical" : "categorical";
}

inline ValueKind parse_value_kind(const std::string& s) {
    if (s == "numerical") return ValueKind::numerical;
    if (s == "categorical") return ValueKind::categorical;
    throw InputError("unknown value kind '" + s + "' (expected numerical|categorical)");
}

/// Categorical (string) or numerical (finite double) property value.
using PropertyValue = std::variant<std::string, double>;

inline ValueKind kind_of(const PropertyValue& v) {
    return std::holds_alternative<double>(v) ? ValueKind::numerical : ValueKind::categorical;
}

inline std::string render(const PropertyValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
    return std::get<std::string>(v);
}

/// Ontology / data schema: classes, relations with class signatures, and
/// the properties each class or relation may carry.
struct Schema {
    std::set<std::string> classes;
    std::set<std::string> relations;
    std::set<std::string> properties;
    std::map<std::string, std::pair<std::string, std::string>> relation_signature;
    std::map<std::string, std::set<std::string>> property_owner;
    std::map<std::string, ValueKind> property_kind;

    /// Throws InputError when the schema's own invariants do not hold.
    void check() const {
        for (const auto& [rel, sig] : relation_signature) {
            if (!relations.count(rel))
                throw InputError("schema: signature for undeclared relation '" + rel + "'");
            if (!classes.count(sig.first) || !classes.count(sig.second))
                throw InputError("schema: relation '" + rel + "' references unknown class");
        }
        for (const auto& [owner, props] : property_owner) {
            if (!classes.count(owner) && !relations.count(owner))
                throw InputError("schema: property owner '" + owner + "' is neither class nor relation");
            for (const auto& p : props)
                if (!properties.count(p))
                    throw InputError("schema: property '" + p + "' of '" + owner + "' is undeclared");
        }
    }
};

struct NodeRecord {
    std::string id;
    std::set<std::string> labels;
    std::map<std::string, PropertyValue> properties;
};

struct EdgeRecord {
    std::string id;
    std::string from;
    std::string to;
    std::set<std::string> labels;
    std::map<std::string, PropertyValue> properties;
};

/// Directed property graph. Immutable once constructed; edge direction is
/// stored but neighbor expansion treats edges as undirected.
class PropertyGraph {
public:
    PropertyGraph() = default;

    PropertyGraph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges) {
        for (auto& n : nodes) {
            if (n.id.empty()) throw InputError("graph: node with empty id");
            auto id = n.id;
            if (!nodes_.emplace(id, std::move(n)).second)
                throw InputError("graph: duplicate node id '" + id + "'");
        }
        for (auto& e : edges) {
            if (e.id.empty()) throw InputError("graph: edge with empty id");
            if (!nodes_.count(e.from) || !nodes_.count(e.to))
                throw InputError("graph: edge '" + e.id + "' has an endpoint that is not a node");
            auto id = e.id;
            adjacency_[e.from].insert(id);
            adjacency_[e.to].insert(id);
            if (!edges_.emplace(id, std::move(e)).second)
                throw InputError("graph: duplicate edge id '" + id + "'");
        }
        auto note_kinds = [this](const std::map<std::string, PropertyValue>& props,
                                 const std::string& owner) {
            for (const auto& [name, value] : props) {
                if (const auto* d = std::get_if<double>(&value); d && !std::isfinite(*d))
                    throw InputError("graph: non-finite value for '" + owner + "." + name + "'");
                auto [it, inserted] = property_kinds_.emplace(name, kind_of(value));
                if (!inserted && it->second != kind_of(value))
                    throw InputError("graph: property '" + name +
                                     "' mixes categorical and numerical values");
            }
        };
        for (const auto& [id, n] : nodes_) note_kinds(n.properties, id);
        for (const auto& [id, e] : edges_) note_kinds(e.properties, id);
    }

    const std::map<std::string, NodeRecord>& nodes() const { return nodes_; }
    const std::map<std::string, EdgeRecord>& edges() const { return edges_; }

    bool has_node(const std::string& id) const { return nodes_.count(id) != 0; }
    bool has_edge(const std::string& id) const { return edges_.count(id) != 0; }

    const NodeRecord& node(const std::string& id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw InputError("graph: unknown node '" + id + "'");
        return it->second;
    }

    const EdgeRecord& edge(const std::string& id) const {
        auto it = edges_.find(id);
        if (it == edges_.end()) throw InputError("graph: unknown edge '" + id + "'");
        return it->second;
    }

    /// Edge IDs touching `node` in either direction, sorted.
    const std::set<std::string>& incident_edges(const std::string& node) const {
        static const std::set<std::string> none;
        auto it = adjacency_.find(node);
        return it == adjacency_.end() ? none : it->second;
    }

    std::optional<ValueKind> property_kind(const std::string& name) const {
        auto it = property_kinds_.find(name);
        if (it == property_kinds_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, NodeRecord> nodes_;
    std::map<std::string, EdgeRecord> edges_;
    std::map<std::string, std::set<std::string>> adjacency_;
    std::map<std::string, ValueKind> property_kinds_;
};

/// Total map from time series source IDs to graph node IDs.
struct Binding {
    std::map<std::string, std::string> source_to_node;

    const std::string& node_of(const std::string& source) const {
        auto it = source_to_node.find(source);
        if (it == source_to_node.end())
            throw InputError("binding: source '" + source + "' is not bound to any node");
        return it->second;
    }
};

/// Throws InputError naming the first source that is unbound or bound to a
/// node missing from the graph.
template <class SourceRange>
void check_binding(const Binding& binding, const PropertyGraph& graph, const SourceRange& sources) {
    for (const auto& [source, node] : binding.source_to_node)
        if (!graph.has_node(node))
            throw InputError("binding: source '" + source + "' maps to unknown node '" + node + "'");
    for (const auto& s : sources) (void)binding.node_of(s);
}

struct Violation {
    enum class Kind { label, property };
    Kind kind;
    std::string element;  // node or edge ID
    std::string name;     // offending label or property name

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool conforms() const { return violations.empty(); }
};

/// Lists every label outside C ∪ R and every property key outside A.
inline ValidationReport validate_graph(const PropertyGraph& graph, const Schema& schema) {
    ValidationReport report;
    auto check = [&](const std::string& id, const std::set<std::string>& labels,
                     const std::map<std::string, PropertyValue>& props) {
        for (const auto& l : labels)
            if (!schema.classes.count(l) && !schema.relations.count(l))
                report.violations.push_back({Violation::Kind::label, id, l});
        for (const auto& [p, _] : props)
            if (!schema.properties.count(p))
                report.violations.push_back({Violation::Kind::property, id, p});
    };
    for (const auto& [id, n] : graph.nodes()) check(id, n.labels, n.properties);
    for (const auto& [id, e] : graph.edges()) check(id, e.labels, e.properties);
    return report;
}

struct Neighbor {
    std::string node;
    std::string via_edge;  // first edge on a shortest path from the start node

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
    friend auto operator<=>(const Neighbor&, const Neighbor&) = default;
};

/// Nodes within `depth` undirected hops of `start` (start excluded), sorted
/// by node ID. Ties between equally short paths go to the smallest edge ID.
/// A depth of 0 yields an empty set.
inline std::vector<Neighbor> neighbors(const PropertyGraph& graph, const std::string& start,
                                       int depth) {
    if (!graph.has_node(start)) throw InputError("neighbors: unknown node '" + start + "'");
    std::map<std::string, std::string> first_edge;
    std::deque<std::pair<std::string, int>> queue{{start, 0}};
    std::set<std::string> seen{start};
    while (!queue.empty()) {
        auto [current, dist] = queue.front();
        queue.pop_front();
        if (dist >= depth) continue;
        for (const auto& eid : graph.incident_edges(current)) {
            const auto& e = graph.edge(eid);
            const auto& other = e.from == current ? e.to : e.from;
            if (!seen.insert(other).second) continue;
            first_edge[other] = current == start ? eid : first_edge.at(current);
            queue.emplace_back(other, dist + 1);
        }
    }
    std::vector<Neighbor> out;
    out.reserve(first_edge.size());
    for (auto& [n, e] : first_edge) out.push_back({n, e});
    return out;
}

// --- JSON interchange -------------------------------------------------------

namespace detail {

inline std::set<std::string> string_set(const nlohmann::json& j, const char* what) {
    std::set<std::string> out;
    if (j.is_null()) return out;
    if (!j.is_array()) throw InputError(std::string(what) + " must be an array of strings");
    for (const auto& v : j) {
        if (!v.is_string()) throw InputError(std::string(what) + " must contain strings");
        out.insert(v.get<std::string>());
    }
    return out;
}

inline std::map<std::string, PropertyValue> property_map(const nlohmann::json& j,
                                                         const std::string& owner) {
    std::map<std::string, PropertyValue> out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw InputError("properties of '" + owner + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        if (v.is_string())
            out.emplace(k, v.get<std::string>());
        else if (v.is_number())
            out.emplace(k, v.get<double>());
        else
            throw InputError("property '" + owner + "." + k + "' must be a string or number");
    }
    return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("'" + path + "': " + e.what());
    }
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const char* ctx) {
    if (!j.is_object() || !j.contains(key))
        throw InputError(std::string(ctx) + ": missing field '" + key + "'");
    return j.at(key);
}

}  // namespace detail

inline PropertyGraph graph_from_json(const nlohmann::json& j) {
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;
    try {
        for (const auto& n : detail::require(j, "nodes", "graph")) {
            NodeRecord r;
            r.id = detail::require(n, "id", "graph node").get<std::string>();
            r.labels = detail::string_set(n.value("labels", nlohmann::json()), "node labels");
            r.properties = detail::property_map(n.value("properties", nlohmann::json()), r.id);
            nodes.push_back(std::move(r));
        }
        if (j.contains("edges")) {
            for (const auto& e : j.at("edges")) {
                EdgeRecord r;
                r.id = detail::require(e, "id", "graph edge").get<std::string>();
                r.from = detail::require(e, "from", "graph edge").get<std::string>();
                r.to = detail::require(e, "to", "graph edge").get<std::string>();
                r.labels = detail::string_set(e.value("labels", nlohmann::json()), "edge labels");
                r.properties = detail::property_map(e.value("properties", nlohmann::json()), r.id);
                edges.push_back(std::move(r));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("graph: ") + e.what());
    }
    return PropertyGraph(std::move(nodes), std::move(edges));
}

inline nlohmann::json to_json(const PropertyGraph& g) {
    auto props = [](const std::map<std::string, PropertyValue>& m) {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& [k, v] : m) {
            if (const auto* d = std::get_if<double>(&v))
                o[k] = *d;
            else
                o[k] = std::get<std::string>(v);
        }
        return o;
    };
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& [id, n] : g.nodes())
        j["nodes"].push_back({{"id", id}, {"labels", n.labels}, {"properties", props(n.properties)}});
    j["edges"] = nlohmann::json::array();
    for (const auto& [id, e] : g.edges())
        j["edges"].push_back({{"id", id},
                              {"from", e.from},
                              {"to", e.to},
                              {"labels", e.labels},
                              {"properties", props(e.properties)}});
    return j;
}

inline Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    try {
        s.classes = detail::string_set(j.value("classes", nlohmann::json()), "schema classes");
        for (const auto& r : j.value("relations", nlohmann::json::array())) {
            auto name = detail::require(r, "name", "schema relation").get<std::string>();
            s.relations.insert(name);
            if (r.contains("from") || r.contains("to"))
                s.relation_signature[name] = {detail::require(r, "from", "schema relation").get<std::string>(),
                                              detail::require(r, "to", "schema relation").get<std::string>()};
        }
        for (const auto& p : j.value("properties", nlohmann::json::array())) {
            auto name = detail::require(p, "name", "schema property").get<std::string>();
            s.properties.insert(name);
            if (p.contains("owner")) s.property_owner[p.at("owner").get<std::string>()].insert(name);
            if (p.contains("kind")) {
                auto kind = parse_value_kind(p.at("kind").get<std::string>());
                auto [it, inserted] = s.property_kind.emplace(name, kind);
                if (!inserted && it->second != kind)
                    throw InputError("schema: property '" + name + "' declared with two kinds");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("schema: ") + e.what());
    }
    s.check();
    return s;
}

inline nlohmann::json to_json(const Schema& s) {
    nlohmann::json j;
    j["classes"] = s.classes;
    j["relations"] = nlohmann::json::array();
    for (const auto& r : s.relations) {
        nlohmann::json o{{"name", r}};
        if (auto it = s.relation_signature.find(r); it != s.relation_signature.end()) {
            o["from"] = it->second.first;
            o["to"] = it->second.second;
        }
        j["relations"].push_back(o);
    }
    j["properties"] = nlohmann::json::array();
    std::set<std::string> owned;
    auto emit = [&](const std::string& p, const std::string* owner) {
        nlohmann::json o{{"name", p}};
        if (owner) o["owner"] = *owner;
        if (auto it = s.property_kind.find(p); it != s.property_kind.end()) o["kind"] = to_string(it->second);
        j["properties"].push_back(o);
    };
    for (const auto& [owner, props] : s.property_owner)
        for (const auto& p : props) {
            emit(p, &owner);
            owned.insert(p);
        }
    for (const auto& p : s.properties)
        if (!owned.count(p)) emit(p, nullptr);
    return j;
}

inline Binding binding_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("binding: expected an object of source -> node");
    Binding b;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw InputError("binding: node for source '" + k + "' must be a string");
        b.source_to_node.emplace(k, v.get<std::string>());
    }
    return b;
}

inline nlohmann::json to_json(const Binding& b) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [s, n] : b.source_to_node) j[s] = n;
    return j;
}

inline PropertyGraph load_graph(const std::string& path) {
    return graph_from_json(detail::read_json_file(path));
}
inline Schema load_schema(const std::string& path) {
    return schema_from_json(detail::read_json_file(path));
}
inline Binding load_binding(const std::string& path) {
    return binding_from_json(detail::read_json_file(path));
}

}  // namespace semrl
