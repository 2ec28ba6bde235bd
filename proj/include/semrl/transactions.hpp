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

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "semrl/error.hpp"
#include "semrl/format.hpp"
#include "semrl/ingestion.hpp"
#include "semrl/semantic_model.hpp"

namespace semrl {

enum class FeatureKind {
    measurement,        // a = source
    node_property,      // a = node, property
    neighbor_property,  // a = node, b = neighbor, property
    node_label,         // a = node
    edge_label,         // a = edge
    edge_presence,      // a = node, b = node
};

/// What a feature group describes. Names round-trip through
/// `name()` / `parse()`, so IDs must not contain '(', ')', ',' or "::".
struct FeatureDescriptor {
    FeatureKind kind = FeatureKind::measurement;
    std::string a;
    std::string b;
    std::string property;

    static FeatureDescriptor measurement(std::string source) {
        return {FeatureKind::measurement, std::move(source), {}, {}};
    }
    static FeatureDescriptor node_property(std::string node, std::string prop) {
        return {FeatureKind::node_property, std::move(node), {}, std::move(prop)};
    }
    static FeatureDescriptor neighbor_property(std::string node, std::string neighbor, std::string prop) {
        return {FeatureKind::neighbor_property, std::move(node), std::move(neighbor), std::move(prop)};
    }
    static FeatureDescriptor node_label(std::string node) {
        return {FeatureKind::node_label, std::move(node), {}, {}};
    }
    static FeatureDescriptor edge_label(std::string edge) {
        return {FeatureKind::edge_label, std::move(edge), {}, {}};
    }
    static FeatureDescriptor edge_presence(std::string from, std::string to) {
        return {FeatureKind::edge_presence, std::move(from), std::move(to), {}};
    }

    std::string name() const {
        switch (kind) {
            case FeatureKind::measurement: return "measurement(" + a + ")";
            case FeatureKind::node_property: return "node_property(" + a + ")." + property;
            case FeatureKind::neighbor_property: return "neighbor_property(" + a + "," + b + ")." + property;
            case FeatureKind::node_label: return "node_label(" + a + ")";
            case FeatureKind::edge_label: return "edge_label(" + a + ")";
            case FeatureKind::edge_presence: return "edge_presence(" + a + "," + b + ")";
        }
        return {};
    }

    static FeatureDescriptor parse(std::string_view s) {
        const auto open = s.find('(');
        const auto close = s.find(')');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open)
            throw InputError("malformed feature name '" + std::string(s) + "'");
        const auto head = s.substr(0, open);
        const auto args = split(s.substr(open + 1, close - open - 1), ',');
        auto tail = s.substr(close + 1);
        std::string prop;
        if (!tail.empty()) {
            if (tail.front() != '.') throw InputError("malformed feature name '" + std::string(s) + "'");
            prop = std::string(tail.substr(1));
        }
        auto want = [&](std::size_t nargs, bool has_prop) {
            if (args.size() != nargs || prop.empty() == has_prop || args[0].empty())
                throw InputError("malformed feature name '" + std::string(s) + "'");
        };
        if (head == "measurement") { want(1, false); return measurement(args[0]); }
        if (head == "node_property") { want(1, true); return node_property(args[0], prop); }
        if (head == "neighbor_property") { want(2, true); return neighbor_property(args[0], args[1], prop); }
        if (head == "node_label") { want(1, false); return node_label(args[0]); }
        if (head == "edge_label") { want(1, false); return edge_label(args[0]); }
        if (head == "edge_presence") { want(2, false); return edge_presence(args[0], args[1]); }
        throw InputError("unknown feature kind in '" + std::string(s) + "'");
    }

    friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
    friend auto operator<=>(const FeatureDescriptor& x, const FeatureDescriptor& y) {
        return std::tie(x.kind, x.a, x.b, x.property) <=> std::tie(y.kind, y.a, y.b, y.property);
    }
};

/// Categorical transactions before encoding: a table with one column per
/// feature and one row per transaction. `domains[f]` lists the admissible
/// classes of column f in their natural order.
struct CategoricalTable {
    std::vector<FeatureDescriptor> features;
    std::vector<std::vector<std::string>> domains;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> timestamps;

    std::optional<std::size_t> column(const FeatureDescriptor& f) const {
        auto it = std::find(features.begin(), features.end(), f);
        if (it == features.end()) return std::nullopt;
        return static_cast<std::size_t>(it - features.begin());
    }
};

struct FeatureGroup {
    FeatureDescriptor descriptor;
    std::vector<std::string> classes;
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
};

/// Feature <-> neuron bookkeeping: groups occupy contiguous, disjoint neuron
/// ranges covering [0, width) in order, and (group, class) <-> neuron is a
/// bijection.
class FeatureRegistry {
public:
    FeatureRegistry() = default;

    explicit FeatureRegistry(std::vector<std::pair<FeatureDescriptor, std::vector<std::string>>> groups) {
        std::set<FeatureDescriptor> seen;
        for (auto& [desc, classes] : groups) {
            if (!seen.insert(desc).second)
                throw InputError("registry: duplicate feature '" + desc.name() + "'");
            if (classes.size() < 2)
                throw InputError("registry: feature '" + desc.name() + "' needs at least 2 classes");
            std::set<std::string> uniq(classes.begin(), classes.end());
            if (uniq.size() != classes.size())
                throw InputError("registry: feature '" + desc.name() + "' has duplicate classes");
            FeatureGroup g{std::move(desc), std::move(classes), width_, 0};
            g.end = g.start + g.classes.size();
            width_ = g.end;
            for (std::size_t c = 0; c < g.classes.size(); ++c)
                neurons_.emplace_back(static_cast<std::uint32_t>(groups_.size()), static_cast<std::uint32_t>(c));
            groups_.push_back(std::move(g));
        }
    }

    /// Registry over the classes actually observed in `table`, kept in
    /// domain order. Groups with a single observed class are dropped when
    /// `drop_constant` is set (they cannot form a softmax group).
    static FeatureRegistry build(const CategoricalTable& table, bool drop_constant = true) {
        std::vector<std::pair<FeatureDescriptor, std::vector<std::string>>> groups;
        for (std::size_t f = 0; f < table.features.size(); ++f) {
            std::set<std::string> observed;
            for (const auto& row : table.rows) observed.insert(row.at(f));
            std::vector<std::string> classes;
            if (f < table.domains.size())
                for (const auto& c : table.domains[f])
                    if (observed.erase(c)) classes.push_back(c);
            classes.insert(classes.end(), observed.begin(), observed.end());
            if (classes.size() < 2) {
                if (drop_constant) continue;
                throw InputError("registry: feature '" + table.features[f].name() + "' is constant");
            }
            groups.emplace_back(table.features[f], std::move(classes));
        }
        return FeatureRegistry(std::move(groups));
    }

    const std::vector<FeatureGroup>& groups() const { return groups_; }
    const FeatureGroup& group(std::size_t g) const { return groups_.at(g); }
    std::size_t group_count() const { return groups_.size(); }
    std::size_t width() const { return width_; }

    std::size_t neuron(std::size_t group, std::size_t cls) const {
        const auto& g = groups_.at(group);
        if (cls >= g.size()) throw InputError("registry: class index out of range for '" + g.descriptor.name() + "'");
        return g.start + cls;
    }
    std::size_t group_of(std::size_t neuron) const { return neurons_.at(neuron).first; }
    std::size_t class_of(std::size_t neuron) const { return neurons_.at(neuron).second; }

    std::optional<std::size_t> find_group(const FeatureDescriptor& d) const {
        for (std::size_t g = 0; g < groups_.size(); ++g)
            if (groups_[g].descriptor == d) return g;
        return std::nullopt;
    }

    std::optional<std::size_t> find_class(std::size_t group, const std::string& cls) const {
        const auto& cs = groups_.at(group).classes;
        auto it = std::find(cs.begin(), cs.end(), cls);
        if (it == cs.end()) return std::nullopt;
        return static_cast<std::size_t>(it - cs.begin());
    }

    /// Header label of a neuron column: "group::class".
    std::string column_name(std::size_t neuron) const {
        const auto& g = groups_.at(group_of(neuron));
        return g.descriptor.name() + "::" + g.classes.at(class_of(neuron));
    }

    std::string hash() const {
        std::uint64_t h = fnv1a("semrl-registry-v1\n");
        for (std::size_t i = 0; i < width_; ++i) h = fnv1a(column_name(i) + "\n", h);
        return to_hex(h);
    }

    friend bool operator==(const FeatureRegistry& x, const FeatureRegistry& y) {
        if (x.width_ != y.width_ || x.groups_.size() != y.groups_.size()) return false;
        for (std::size_t g = 0; g < x.groups_.size(); ++g)
            if (x.groups_[g].descriptor != y.groups_[g].descriptor || x.groups_[g].classes != y.groups_[g].classes)
                return false;
        return true;
    }

private:
    std::vector<FeatureGroup> groups_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> neurons_;
    std::size_t width_ = 0;
};

inline nlohmann::json to_json(const FeatureRegistry& r) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.groups()) groups.push_back({{"feature", g.descriptor.name()}, {"classes", g.classes}});
    return groups;
}

inline FeatureRegistry registry_from_json(const nlohmann::json& j) {
    std::vector<std::pair<FeatureDescriptor, std::vector<std::string>>> groups;
    try {
        for (const auto& g : j)
            groups.emplace_back(FeatureDescriptor::parse(g.at("feature").get<std::string>()),
                                g.at("classes").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("registry: ") + e.what());
    }
    return FeatureRegistry(std::move(groups));
}

/// One-hot encoded transactions plus their class-index form, which is what
/// rule metrics count over.
class TransactionSet {
public:
    TransactionSet() = default;

    /// `class_rows` is row-major, one class index per registry group.
    TransactionSet(FeatureRegistry registry, std::vector<std::uint32_t> class_rows)
        : registry_(std::move(registry)), classes_(std::move(class_rows)) {
        const std::size_t groups = registry_.group_count();
        if (groups == 0) {
            if (!classes_.empty()) throw InputError("transactions: class rows without groups");
            return;
        }
        if (classes_.size() % groups != 0) throw InputError("transactions: ragged class rows");
        rows_ = classes_.size() / groups;
        matrix_.assign(rows_ * registry_.width(), 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t g = 0; g < groups; ++g)
                matrix_[r * registry_.width() + registry_.neuron(g, classes_[r * groups + g])] = 1.0;
    }

    const FeatureRegistry& registry() const { return registry_; }
    std::size_t size() const { return rows_; }
    bool empty() const { return rows_ == 0; }
    std::size_t width() const { return registry_.width(); }

    std::span<const double> row(std::size_t r) const {
        return {matrix_.data() + r * width(), width()};
    }
    std::span<const std::uint32_t> classes(std::size_t r) const {
        return {classes_.data() + r * registry_.group_count(), registry_.group_count()};
    }
    std::uint32_t class_at(std::size_t r, std::size_t g) const {
        return classes_[r * registry_.group_count() + g];
    }
    const std::vector<double>& matrix() const { return matrix_; }
    const std::vector<std::uint32_t>& class_matrix() const { return classes_; }

private:
    FeatureRegistry registry_;
    std::vector<std::uint32_t> classes_;
    std::vector<double> matrix_;
    std::size_t rows_ = 0;
};

/// Encodes `table` against an existing registry. Every registry group must
/// be a column of the table; a class the registry has not seen is an error.
inline TransactionSet encode_one_hot(const CategoricalTable& table, const FeatureRegistry& registry) {
    std::vector<std::size_t> column_of;
    for (const auto& g : registry.groups()) {
        auto col = table.column(g.descriptor);
        if (!col) throw InputError("encode: transactions lack feature '" + g.descriptor.name() + "'");
        column_of.push_back(*col);
    }
    std::vector<std::uint32_t> classes;
    classes.reserve(table.rows.size() * registry.group_count());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.features.size())
            throw InputError("encode: transaction " + std::to_string(r) + " is incomplete");
        for (std::size_t g = 0; g < registry.group_count(); ++g) {
            auto c = registry.find_class(g, row[column_of[g]]);
            if (!c)
                throw InputError("encode: unseen class '" + row[column_of[g]] + "' for feature '" +
                                 registry.group(g).descriptor.name() + "'");
            classes.push_back(static_cast<std::uint32_t>(*c));
        }
    }
    return TransactionSet(registry, std::move(classes));
}

inline TransactionSet encode_one_hot(const CategoricalTable& table) {
    return encode_one_hot(table, FeatureRegistry::build(table));
}

/// Recovers class indices from a one-hot row; throws if the row is not
/// one-hot within every group.
inline std::vector<std::uint32_t> decode_one_hot(const FeatureRegistry& registry, std::span<const double> row) {
    if (row.size() != registry.width()) throw InputError("decode: width mismatch");
    std::vector<std::uint32_t> out;
    for (const auto& g : registry.groups()) {
        std::optional<std::uint32_t> hot;
        for (std::size_t i = g.start; i < g.end; ++i) {
            if (row[i] == 1.0) {
                if (hot) throw InputError("decode: group '" + g.descriptor.name() + "' has two hot neurons");
                hot = static_cast<std::uint32_t>(i - g.start);
            } else if (row[i] != 0.0) {
                throw InputError("decode: group '" + g.descriptor.name() + "' is not one-hot");
            }
        }
        if (!hot) throw InputError("decode: group '" + g.descriptor.name() + "' has no hot neuron");
        out.push_back(*hot);
    }
    return out;
}

/// Denoising corruption: row + noise_factor * N(0, 1) per component, clamped
/// to [0, 1].
template <class Rng>
std::vector<double> corrupt(std::span<const double> row, double noise_factor, Rng& rng) {
    if (noise_factor < 0.0) throw InputError("noise factor must be >= 0");
    std::vector<double> out(row.begin(), row.end());
    if (noise_factor == 0.0) return out;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : out) v = std::clamp(v + noise_factor * gauss(rng), 0.0, 1.0);
    return out;
}

// --- enrichment --------------------------------------------------------------

namespace detail {

inline std::string join_labels(const std::set<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) out += '|';
        out += l;
    }
    return out;
}

/// Class labels for graph property values: numerical properties are binned
/// with equal frequency over every node and edge carrying them.
class GraphValueCoder {
public:
    GraphValueCoder(const PropertyGraph& graph, int bins) {
        std::map<std::string, std::vector<double>> numeric;
        std::map<std::string, std::set<std::string>> categorical;
        auto collect = [&](const std::map<std::string, PropertyValue>& props) {
            for (const auto& [name, v] : props) {
                if (const auto* d = std::get_if<double>(&v))
                    numeric[name].push_back(*d);
                else
                    categorical[name].insert(std::get<std::string>(v));
            }
        };
        for (const auto& [_, n] : graph.nodes()) collect(n.properties);
        for (const auto& [_, e] : graph.edges()) collect(e.properties);
        for (const auto& [name, vals] : numeric) {
            auto scheme = fit_equal_frequency_bins(vals, bins);
            domains_[name] = scheme.labels();
            schemes_.emplace(name, std::move(scheme));
        }
        for (const auto& [name, vals] : categorical) domains_[name] = {vals.begin(), vals.end()};

        std::set<std::string> node_labels, edge_labels;
        for (const auto& [_, n] : graph.nodes())
            if (!n.labels.empty()) node_labels.insert(join_labels(n.labels));
        for (const auto& [_, e] : graph.edges())
            if (!e.labels.empty()) edge_labels.insert(join_labels(e.labels));
        node_label_domain_ = {node_labels.begin(), node_labels.end()};
        edge_label_domain_ = {edge_labels.begin(), edge_labels.end()};
    }

    std::string encode(const std::string& property, const PropertyValue& v) const {
        if (const auto* d = std::get_if<double>(&v)) {
            const auto& s = schemes_.at(property);
            return s.label(s.assign(*d));
        }
        return std::get<std::string>(v);
    }

    const std::vector<std::string>& domain(const std::string& property) const { return domains_.at(property); }
    const std::vector<std::string>& node_label_domain() const { return node_label_domain_; }
    const std::vector<std::string>& edge_label_domain() const { return edge_label_domain_; }

private:
    std::map<std::string, BinScheme> schemes_;
    std::map<std::string, std::vector<std::string>> domains_;
    std::vector<std::string> node_label_domain_;
    std::vector<std::string> edge_label_domain_;
};

}  // namespace detail

/// Joins all sources' discretized values per timestamp (timestamps missing a
/// source are dropped; order of first appearance is kept) and appends, for
/// each source, the bound node's label and properties plus labels and
/// properties of neighbors up to `neighbor_depth` hops. Numerical graph
/// properties are binned with `graph_bins` equal-frequency bins.
inline CategoricalTable enrich(const DiscretizedDataset& data, const PropertyGraph& graph, const Binding& binding,
                               int neighbor_depth, int graph_bins = 5) {
    if (neighbor_depth < 0) throw InputError("neighbor depth must be >= 0");
    check_binding(binding, graph, data.sources);

    CategoricalTable table;
    std::vector<std::string> static_values;
    std::set<FeatureDescriptor> seen;
    auto add = [&](FeatureDescriptor f, std::vector<std::string> domain, std::string value) {
        if (!seen.insert(f).second) return;
        table.features.push_back(std::move(f));
        table.domains.push_back(std::move(domain));
        static_values.push_back(std::move(value));
    };

    for (const auto& s : data.sources) {
        table.features.push_back(FeatureDescriptor::measurement(s));
        seen.insert(table.features.back());
        auto it = data.domains.find(s);
        table.domains.push_back(it == data.domains.end() ? std::vector<std::string>{} : it->second);
    }
    const std::size_t measurement_count = table.features.size();

    const detail::GraphValueCoder coder(graph, graph_bins);
    for (const auto& s : data.sources) {
        const auto& vid = binding.node_of(s);
        const auto& v = graph.node(vid);
        if (!v.labels.empty())
            add(FeatureDescriptor::node_label(vid), coder.node_label_domain(), detail::join_labels(v.labels));
        for (const auto& [p, val] : v.properties)
            add(FeatureDescriptor::node_property(vid, p), coder.domain(p), coder.encode(p, val));
        for (const auto& nb : neighbors(graph, vid, neighbor_depth)) {
            const auto& u = graph.node(nb.node);
            if (!u.labels.empty())
                add(FeatureDescriptor::node_label(nb.node), coder.node_label_domain(), detail::join_labels(u.labels));
            for (const auto& [p, val] : u.properties)
                add(FeatureDescriptor::neighbor_property(vid, nb.node, p), coder.domain(p), coder.encode(p, val));
            const auto& e = graph.edge(nb.via_edge);
            if (!e.labels.empty())
                add(FeatureDescriptor::edge_label(nb.via_edge), coder.edge_label_domain(), detail::join_labels(e.labels));
            bool adjacent = false;
            for (const auto& eid : graph.incident_edges(vid)) {
                const auto& ie = graph.edge(eid);
                if ((ie.from == vid && ie.to == nb.node) || (ie.to == vid && ie.from == nb.node)) adjacent = true;
            }
            add(FeatureDescriptor::edge_presence(vid, nb.node), {"absent", "present"}, adjacent ? "present" : "absent");
        }
    }

    std::vector<std::string> order;
    std::map<std::string, std::map<std::string, std::string>> by_time;
    for (const auto& r : data.records) {
        auto [it, fresh] = by_time.try_emplace(r.timestamp);
        if (fresh) order.push_back(r.timestamp);
        if (!it->second.emplace(r.source, r.cls).second)
            throw InputError("duplicate value for source '" + r.source + "' at timestamp '" + r.timestamp + "'");
    }
    for (const auto& ts : order) {
        const auto& values = by_time.at(ts);
        if (values.size() != measurement_count) continue;
        std::vector<std::string> row;
        row.reserve(table.features.size());
        for (const auto& s : data.sources) row.push_back(values.at(s));
        row.insert(row.end(), static_values.begin(), static_values.end());
        table.rows.push_back(std::move(row));
        table.timestamps.push_back(ts);
    }
    return table;
}

// --- columnar dump -------------------------------------------------------------

/// One column per neuron, header "group::class" (quoted), values 0/1.
inline void write_transactions_csv(std::ostream& out, const TransactionSet& ts) {
    const auto& reg = ts.registry();
    for (std::size_t i = 0; i < reg.width(); ++i) out << (i ? "," : "") << quote_csv(reg.column_name(i));
    out << '\n';
    for (std::size_t r = 0; r < ts.size(); ++r) {
        auto row = ts.row(r);
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << (row[i] == 1.0 ? '1' : '0');
        out << '\n';
    }
}

inline TransactionSet read_transactions_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw InputError("transactions csv: missing header");
    std::vector<std::pair<FeatureDescriptor, std::vector<std::string>>> groups;
    for (const auto& col : split_csv(trim(line))) {
        const auto sep = col.find("::");
        if (sep == std::string::npos) throw InputError("transactions csv: malformed header column '" + col + "'");
        auto desc = FeatureDescriptor::parse(col.substr(0, sep));
        if (groups.empty() || groups.back().first != desc) groups.emplace_back(desc, std::vector<std::string>{});
        groups.back().second.push_back(col.substr(sep + 2));
    }
    FeatureRegistry registry(std::move(groups));
    std::vector<std::uint32_t> classes;
    std::vector<double> row(registry.width());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(trim(line), ',');
        if (cells.size() != registry.width())
            throw InputError("transactions csv: line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " + std::to_string(registry.width()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            auto v = parse_number(cells[i]);
            if (!v) throw InputError("transactions csv: line " + std::to_string(line_no) + ": bad cell");
            row[i] = *v;
        }
        try {
            auto c = decode_one_hot(registry, row);
            classes.insert(classes.end(), c.begin(), c.end());
        } catch (const InputError& e) {
            throw InputError("transactions csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return TransactionSet(std::move(registry), std::move(classes));
}

}  // namespace semrl
