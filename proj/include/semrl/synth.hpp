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
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "semrl/error.hpp"
#include "semrl/format.hpp"
#include "semrl/ingestion.hpp"
#include "semrl/semantic_model.hpp"

namespace semrl {

enum class GraphTemplate { chain, star, grid };

inline GraphTemplate parse_graph_template(const std::string& s) {
    if (s == "chain") return GraphTemplate::chain;
    if (s == "star") return GraphTemplate::star;
    if (s == "grid") return GraphTemplate::grid;
    throw InputError("unknown graph template '" + s + "' (expected chain|star|grid)");
}

/// A numerical source taking a given bin (0-based) of its equal-frequency
/// discretization.
struct SourceClass {
    std::string source;
    std::size_t bin = 0;

    friend bool operator==(const SourceClass&, const SourceClass&) = default;
};

struct PlantedRule {
    std::vector<SourceClass> antecedents;
    SourceClass consequent;
    double confidence = 1.0;
    double support = 0.3;
};

/// Synthetic water-network-style scenario. Numerical sources are named
/// s1..sN, categorical (valve state) sources c1..cM.
struct SynthSpec {
    std::size_t sources = 6;
    std::size_t categorical_sources = 0;
    /// Probability of the dominant state of each categorical source; 0 means
    /// uniform over `categorical_classes`.
    double categorical_skew = 0.0;
    std::size_t categorical_classes = 3;
    GraphTemplate graph = GraphTemplate::chain;
    std::size_t nodes = 10;
    std::vector<PlantedRule> planted;
    std::size_t transactions = 2000;
    /// Fraction of cells of unplanted numerical sources redrawn uniformly
    /// (unbalancing their bins).
    double noise_rate = 0.0;
    int bins = 5;
    std::uint64_t seed = 1;

    std::vector<std::string> numerical_names() const {
        std::vector<std::string> out;
        for (std::size_t i = 1; i <= sources; ++i) out.push_back("s" + std::to_string(i));
        return out;
    }
    std::vector<std::string> categorical_names() const {
        std::vector<std::string> out;
        for (std::size_t i = 1; i <= categorical_sources; ++i) out.push_back("c" + std::to_string(i));
        return out;
    }
};

struct SynthData {
    TimeSeriesDataset dataset;
    PropertyGraph graph;
    Schema schema;
    Binding binding;
    SourceSettingsMap settings;
};

/// Rows per bin produced by nearest-rank equal-frequency binning of n
/// distinct values into k bins.
inline std::vector<std::size_t> equal_frequency_sizes(std::size_t n, std::size_t k) {
    std::vector<std::size_t> sizes;
    std::size_t prev = 0;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::size_t r = (i * n + k - 1) / k;
        sizes.push_back(r - prev);
        prev = r;
    }
    return sizes;
}

namespace detail {

inline std::vector<std::size_t> balanced_column(const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
    std::vector<std::size_t> col;
    for (std::size_t c = 0; c < sizes.size(); ++c) col.insert(col.end(), sizes[c], c);
    std::shuffle(col.begin(), col.end(), rng);
    return col;
}

inline PropertyGraph synth_graph(const SynthSpec& spec, std::mt19937_64& rng) {
    static const std::vector<std::string> materials{"PVC", "cast_iron", "steel"};
    static const std::vector<std::string> zones{"north", "south"};
    std::uniform_real_distribution<double> length(50.0, 500.0);
    std::uniform_real_distribution<double> elevation(5.0, 80.0);
    std::vector<NodeRecord> nodes;
    for (std::size_t i = 0; i < spec.nodes; ++i) {
        NodeRecord n;
        const bool pipe = i % 2 == 0;
        n.id = (pipe ? "P" : "J") + std::to_string(i + 1);
        n.labels = {pipe ? "Pipe" : "Junction"};
        if (pipe) {
            n.properties["length"] = std::round(length(rng) * 10.0) / 10.0;
            n.properties["material"] = materials[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
        } else {
            n.properties["elevation"] = std::round(elevation(rng) * 10.0) / 10.0;
            n.properties["zone"] = zones[std::uniform_int_distribution<std::size_t>(0, 1)(rng)];
        }
        nodes.push_back(std::move(n));
    }
    std::vector<EdgeRecord> edges;
    auto connect = [&](std::size_t a, std::size_t b) {
        EdgeRecord e;
        e.id = "e" + std::to_string(edges.size() + 1);
        e.from = nodes[a].id;
        e.to = nodes[b].id;
        e.labels = {"connected_to"};
        edges.push_back(std::move(e));
    };
    if (spec.graph == GraphTemplate::chain) {
        for (std::size_t i = 0; i + 1 < spec.nodes; ++i) connect(i, i + 1);
    } else if (spec.graph == GraphTemplate::star) {
        for (std::size_t i = 1; i < spec.nodes; ++i) connect(0, i);
    } else {
        const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(spec.nodes))));
        for (std::size_t i = 0; i < spec.nodes; ++i) {
            if ((i + 1) % side != 0 && i + 1 < spec.nodes) connect(i, i + 1);
            if (i + side < spec.nodes) connect(i, i + side);
        }
    }
    return PropertyGraph(std::move(nodes), std::move(edges));
}

inline Schema synth_schema() {
    Schema s;
    s.classes = {"Junction", "Pipe"};
    s.relations = {"connected_to"};
    s.relation_signature["connected_to"] = {"Pipe", "Junction"};
    s.properties = {"elevation", "length", "material", "zone"};
    s.property_owner["Pipe"] = {"length", "material"};
    s.property_owner["Junction"] = {"elevation", "zone"};
    s.property_kind = {{"elevation", ValueKind::numerical},
                       {"length", ValueKind::numerical},
                       {"material", ValueKind::categorical},
                       {"zone", ValueKind::categorical}};
    return s;
}

}  // namespace detail

/// Generates a dataset whose numerical classes line up exactly with the
/// equal-frequency bins fitted later, so each planted rule survives
/// discretization with its constructed support and confidence. Unplanted
/// cells are independent; unplanted numerical sources are exactly balanced.
inline SynthData generate(const SynthSpec& spec) {
    if (spec.sources + spec.categorical_sources == 0) throw InputError("synth: needs at least one source");
    if (spec.nodes == 0) throw InputError("synth: needs at least one graph node");
    if (spec.transactions == 0) throw InputError("synth: needs at least one transaction");
    if (spec.bins < 2) throw InputError("synth: bins must be >= 2");
    if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0) throw InputError("synth: noise_rate must lie in [0, 1]");
    if (spec.categorical_sources && spec.categorical_classes < 2)
        throw InputError("synth: categorical_classes must be >= 2");
    if (spec.categorical_skew < 0.0 || spec.categorical_skew >= 1.0)
        throw InputError("synth: categorical_skew must lie in [0, 1)");

    const std::size_t n = spec.transactions;
    const auto k = static_cast<std::size_t>(spec.bins);
    const auto names = spec.numerical_names();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;

    // feasibility of the planted rules
    std::set<std::string> consequents, antecedent_sources;
    for (const auto& p : spec.planted) {
        if (p.antecedents.empty()) throw InputError("synth: planted rule without antecedent");
        if (!(p.confidence > 0.0 && p.confidence <= 1.0))
            throw InputError("synth: planted confidence must lie in (0, 1]");
        std::set<std::string> used;
        for (const auto& a : p.antecedents) {
            if (!index.count(a.source)) throw InputError("synth: planted rule references unknown source '" + a.source + "'");
            if (a.bin >= k) throw InputError("synth: planted bin out of range for '" + a.source + "'");
            if (!used.insert(a.source).second) throw InputError("synth: planted rule repeats source '" + a.source + "'");
            antecedent_sources.insert(a.source);
        }
        if (!index.count(p.consequent.source))
            throw InputError("synth: planted rule references unknown source '" + p.consequent.source + "'");
        if (p.consequent.bin >= k) throw InputError("synth: planted bin out of range for '" + p.consequent.source + "'");
        if (used.count(p.consequent.source)) throw InputError("synth: planted consequent also in its antecedent");
        if (!consequents.insert(p.consequent.source).second)
            throw InputError("synth: conflicting planted rules share consequent '" + p.consequent.source + "'");
        if (p.support * static_cast<double>(n) < 10.0) throw InputError("synth: planted support * n must be >= 10");
    }
    for (const auto& c : consequents)
        if (antecedent_sources.count(c))
            throw InputError("synth: conflicting planted rules, '" + c + "' is both consequent and antecedent");

    std::mt19937_64 rng(spec.seed);
    const auto sizes = equal_frequency_sizes(n, k);
    std::vector<std::vector<std::size_t>> quota(names.size(), sizes);
    std::vector<std::optional<std::size_t>> plateau(names.size());

    // A class can hold more than its equal-frequency share when all of its
    // values tie: the share is taken from the next class up and the cut
    // between them lands inside the tied run.
    auto enlarge = [&](std::size_t s, std::size_t c, std::size_t q) {
        auto& qs = quota[s];
        if (q <= qs[c]) return;
        if (plateau[s] && *plateau[s] != c)
            throw InputError("synth: conflicting planted rules need two enlarged bins of '" + names[s] + "'");
        if (c + 1 >= k || q >= qs[c] + qs[c + 1])
            throw InputError("synth: infeasible planted rule, bin " + std::to_string(c) + " of '" + names[s] +
                             "' cannot hold " + std::to_string(q) + " rows with " + std::to_string(k) + " bins");
        qs[c + 1] -= q - qs[c];
        qs[c] = q;
        plateau[s] = c;
    };
    for (const auto& p : spec.planted)
        if (p.antecedents.size() == 1)
            enlarge(index.at(p.antecedents[0].source), p.antecedents[0].bin,
                    static_cast<std::size_t>(std::llround(p.support * static_cast<double>(n) / p.confidence)));

    std::vector<std::vector<std::size_t>> cls(names.size());
    for (std::size_t s = 0; s < names.size(); ++s) {
        if (consequents.count(names[s])) continue;
        cls[s] = detail::balanced_column(quota[s], rng);
        if (spec.noise_rate > 0.0 && !antecedent_sources.count(names[s])) {
            std::bernoulli_distribution flip(spec.noise_rate);
            std::uniform_int_distribution<std::size_t> any(0, k - 1);
            for (auto& c : cls[s])
                if (flip(rng)) c = any(rng);
        }
    }

    for (const auto& p : spec.planted) {
        std::vector<std::size_t> x_rows, other_rows;
        for (std::size_t r = 0; r < n; ++r) {
            bool x = true;
            for (const auto& a : p.antecedents) x = x && cls[index.at(a.source)][r] == a.bin;
            (x ? x_rows : other_rows).push_back(r);
        }
        if (x_rows.empty()) throw InputError("synth: planted antecedent never occurs");
        const auto target = p.consequent.bin;
        const auto hits = static_cast<std::size_t>(std::llround(p.confidence * static_cast<double>(x_rows.size())));
        const double support = static_cast<double>(hits) / static_cast<double>(n);
        if (std::abs(support - p.support) > 0.05 + 1e-12)
            throw InputError("synth: infeasible planted support " + format_number(p.support) + "; with " +
                             std::to_string(k) + " bins this rule reaches " + format_number(support));
        const auto s = index.at(p.consequent.source);
        enlarge(s, target, hits);

        std::vector<std::size_t> others;  // non-target classes still to place
        for (std::size_t c = 0; c < k; ++c)
            if (c != target) others.insert(others.end(), quota[s][c], c);
        std::shuffle(others.begin(), others.end(), rng);
        if (x_rows.size() - hits > others.size())
            throw InputError("synth: infeasible planted rule, not enough non-consequent rows");

        auto& col = cls[s];
        col.assign(n, 0);
        std::shuffle(x_rows.begin(), x_rows.end(), rng);
        for (std::size_t i = 0; i < x_rows.size(); ++i) {
            if (i < hits) {
                col[x_rows[i]] = target;
            } else {
                col[x_rows[i]] = others.back();
                others.pop_back();
            }
        }
        std::vector<std::size_t> rest(others);
        rest.insert(rest.end(), quota[s][target] - hits, target);
        std::shuffle(rest.begin(), rest.end(), rng);
        for (std::size_t i = 0; i < other_rows.size(); ++i) col[other_rows[i]] = rest[i];
    }

    // categorical valve states with an optional dominant state
    const auto cat_names = spec.categorical_names();
    std::vector<std::vector<std::size_t>> cat(cat_names.size());
    {
        std::vector<double> weights(spec.categorical_classes, 1.0);
        if (spec.categorical_skew > 0.0) {
            const double rest = (1.0 - spec.categorical_skew) / static_cast<double>(spec.categorical_classes - 1);
            std::fill(weights.begin(), weights.end(), rest);
            weights[0] = spec.categorical_skew;
        }
        std::discrete_distribution<std::size_t> draw(weights.begin(), weights.end());
        for (auto& col : cat) {
            col.resize(n);
            for (auto& c : col) c = draw(rng);
        }
    }

    SynthData out;
    out.graph = detail::synth_graph(spec, rng);
    out.schema = detail::synth_schema();
    std::vector<std::string> node_ids;
    for (const auto& [id, _] : out.graph.nodes()) node_ids.push_back(id);
    // bind sources to nodes in creation order (P1, J2, P3, ...)
    std::sort(node_ids.begin(), node_ids.end(), [](const std::string& a, const std::string& b) {
        return std::stoul(a.substr(1)) < std::stoul(b.substr(1));
    });
    std::vector<std::string> all_sources(names);
    all_sources.insert(all_sources.end(), cat_names.begin(), cat_names.end());
    for (std::size_t i = 0; i < all_sources.size(); ++i)
        out.binding.source_to_node[all_sources[i]] = node_ids[i % node_ids.size()];

    std::vector<double> offset(names.size()), scale(names.size());
    std::uniform_real_distribution<double> off(0.0, 100.0), sc(0.5, 5.0), inner(0.05, 0.95);
    for (std::size_t s = 0; s < names.size(); ++s) {
        offset[s] = std::round(off(rng));
        scale[s] = std::round(sc(rng) * 10.0) / 10.0;
        out.settings[names[s]] = SourceSettings{ValueKind::numerical, spec.bins};
    }
    static const std::vector<std::string> states{"open", "closed", "throttled", "stuck", "bypass", "maintenance"};
    for (const auto& c : cat_names) out.settings[c] = SourceSettings{ValueKind::categorical, std::nullopt};
    auto state_name = [](std::size_t c) {
        return c < states.size() ? states[c] : "state" + std::to_string(c);
    };

    auto& ds = out.dataset;
    for (const auto& [s, cfg] : out.settings) ds.kinds[s] = cfg.kind;
    ds.sources.insert(all_sources.begin(), all_sources.end());
    const int width = static_cast<int>(std::to_string(n).size());
    for (std::size_t r = 0; r < n; ++r) {
        std::string ts = std::to_string(r + 1);
        ts = "t" + std::string(static_cast<std::size_t>(width) - ts.size(), '0') + ts;
        for (std::size_t s = 0; s < names.size(); ++s) {
            // round to 1e-6 so the CSV text reproduces the exact value
            const double u = plateau[s] == cls[s][r] ? 0.5 : inner(rng);
            const double v = offset[s] + scale[s] * (static_cast<double>(cls[s][r]) + u);
            ds.records.push_back({names[s], ts, std::round(v * 1e6) / 1e6});
        }
        for (std::size_t c = 0; c < cat_names.size(); ++c) ds.records.push_back({cat_names[c], ts, state_name(cat[c][r])});
    }
    return out;
}

inline void write_timeseries_csv(std::ostream& out, const TimeSeriesDataset& ds) {
    out << "source_id,timestamp,value\n";
    for (const auto& r : ds.records) out << r.source << ',' << r.timestamp << ',' << render(r.value) << '\n';
}

inline nlohmann::json to_json(const SourceSettingsMap& settings) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [s, cfg] : settings) {
        nlohmann::json o{{"kind", to_string(cfg.kind)}};
        if (cfg.bins) o["bins"] = *cfg.bins;
        j[s] = o;
    }
    return j;
}

}  // namespace semrl
