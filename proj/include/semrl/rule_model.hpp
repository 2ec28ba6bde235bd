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
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>
#include "semrl/error.hpp"
#include "semrl/format.hpp"
#include "semrl/transactions.hpp"

namespace semrl {

/// A (feature group, class) assignment, i.e. one item of a rule.
struct ItemRef {
    std::uint32_t group = 0;
    std::uint32_t cls = 0;

    friend bool operator==(const ItemRef&, const ItemRef&) = default;
    friend auto operator<=>(const ItemRef&, const ItemRef&) = default;
};

struct RuleMetrics {
    double support = 0.0;
    std::optional<double> confidence;
    std::optional<double> lift;
    double leverage = 0.0;
    std::optional<double> zhangs;

    bool complete() const { return confidence && lift && zhangs; }
};

/// X -> Y with a single consequent item.
struct Rule {
    std::vector<ItemRef> antecedents;  // sorted by group, one item per group
    ItemRef consequent;
    std::optional<RuleMetrics> metrics;

    std::pair<std::vector<ItemRef>, ItemRef> key() const { return {antecedents, consequent}; }
};

/// Canonical rule: sorts the antecedents and checks |X| >= 1, one item per
/// group and that the consequent's group is not among the antecedents.
inline Rule make_rule(std::vector<ItemRef> antecedents, ItemRef consequent) {
    if (antecedents.empty()) throw InputError("rule: empty antecedent");
    std::sort(antecedents.begin(), antecedents.end());
    for (std::size_t i = 0; i < antecedents.size(); ++i) {
        if (i && antecedents[i].group == antecedents[i - 1].group)
            throw InputError("rule: two antecedent items on one feature");
        if (antecedents[i].group == consequent.group)
            throw InputError("rule: consequent feature also appears in the antecedent");
    }
    return Rule{std::move(antecedents), consequent, std::nullopt};
}

inline void sort_rules(std::vector<Rule>& rules) {
    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) { return a.key() < b.key(); });
}

// --- metrics -------------------------------------------------------------------

/// Transaction counts behind every metric: |D|, |X|, |Y|, |X u Y|.
struct RuleCounts {
    std::size_t n = 0;
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t xy = 0;
};

inline bool holds(const TransactionSet& d, std::size_t row, const std::vector<ItemRef>& items) {
    for (const auto& it : items)
        if (d.class_at(row, it.group) != it.cls) return false;
    return true;
}

inline RuleCounts count_rule(const Rule& rule, const TransactionSet& d) {
    RuleCounts c;
    c.n = d.size();
    for (std::size_t r = 0; r < d.size(); ++r) {
        const bool x = holds(d, r, rule.antecedents);
        const bool y = d.class_at(r, rule.consequent.group) == rule.consequent.cls;
        c.x += x;
        c.y += y;
        c.xy += x && y;
    }
    return c;
}

/// All five measures from raw counts. confidence needs |X| > 0, lift also
/// |Y| > 0, Zhang's metric needs |not X| > 0 and a non-zero denominator.
inline RuleMetrics metrics_from_counts(const RuleCounts& c) {
    if (c.n == 0) throw InputError("metrics: empty transaction set");
    const double n = static_cast<double>(c.n);
    RuleMetrics m;
    m.support = static_cast<double>(c.xy) / n;
    const double sx = static_cast<double>(c.x) / n;
    const double sy = static_cast<double>(c.y) / n;
    m.leverage = m.support - sx * sy;
    if (c.x > 0) m.confidence = static_cast<double>(c.xy) / static_cast<double>(c.x);
    if (m.confidence && c.y > 0) m.lift = *m.confidence / sy;
    if (m.confidence && c.n > c.x) {
        const double conf_not = static_cast<double>(c.y - c.xy) / static_cast<double>(c.n - c.x);
        const double denom = std::max(*m.confidence, conf_not);
        if (denom > 0.0) m.zhangs = (*m.confidence - conf_not) / denom;
    }
    return m;
}

inline RuleMetrics evaluate(const Rule& rule, const TransactionSet& d) {
    return metrics_from_counts(count_rule(rule, d));
}

inline double support(const Rule& rule, const TransactionSet& d) { return evaluate(rule, d).support; }
inline std::optional<double> confidence(const Rule& rule, const TransactionSet& d) { return evaluate(rule, d).confidence; }
inline std::optional<double> lift(const Rule& rule, const TransactionSet& d) { return evaluate(rule, d).lift; }
inline double leverage(const Rule& rule, const TransactionSet& d) { return evaluate(rule, d).leverage; }
inline std::optional<double> zhangs_metric(const Rule& rule, const TransactionSet& d) { return evaluate(rule, d).zhangs; }

/// Fraction of reference rules matched exactly (same antecedent set and
/// consequent) by some candidate; undefined for an empty reference.
inline std::optional<double> rule_overlap(const std::vector<Rule>& reference, const std::vector<Rule>& candidates) {
    if (reference.empty()) return std::nullopt;
    std::set<std::pair<std::vector<ItemRef>, ItemRef>> keys;
    for (const auto& r : candidates) keys.insert(r.key());
    std::set<std::pair<std::vector<ItemRef>, ItemRef>> ref_keys;
    for (const auto& r : reference) ref_keys.insert(r.key());
    std::size_t hit = 0;
    for (const auto& k : ref_keys) hit += keys.count(k);
    return static_cast<double>(hit) / static_cast<double>(ref_keys.size());
}

/// Averages over rules whose five metrics are all defined.
struct MetricSummary {
    std::size_t rule_count = 0;
    std::size_t undefined_count = 0;
    double support = 0.0;
    double confidence = 0.0;
    double lift = 0.0;
    double leverage = 0.0;
    double zhangs = 0.0;

    std::size_t defined_count() const { return rule_count - undefined_count; }
};

inline MetricSummary summarize(const std::vector<Rule>& rules) {
    MetricSummary s;
    s.rule_count = rules.size();
    for (const auto& r : rules) {
        if (!r.metrics || !r.metrics->complete()) {
            ++s.undefined_count;
            continue;
        }
        s.support += r.metrics->support;
        s.confidence += *r.metrics->confidence;
        s.lift += *r.metrics->lift;
        s.leverage += r.metrics->leverage;
        s.zhangs += *r.metrics->zhangs;
    }
    if (const auto k = s.defined_count(); k > 0) {
        const double d = static_cast<double>(k);
        s.support /= d;
        s.confidence /= d;
        s.lift /= d;
        s.leverage /= d;
        s.zhangs /= d;
    }
    return s;
}

// --- item forms and rendering ----------------------------------------------

enum class ItemForm { property_comparison, measurement_comparison, node_label, edge_label, edge_presence };

enum class Comparison { eq, ne, in, not_in, gt, lt, le, ge };

inline const char* symbol(Comparison c) {
    switch (c) {
        case Comparison::eq: return "=";
        case Comparison::ne: return "≠";
        case Comparison::in: return "∈";
        case Comparison::not_in: return "∉";
        case Comparison::gt: return ">";
        case Comparison::lt: return "<";
        case Comparison::le: return "≤";
        case Comparison::ge: return "≥";
    }
    return "?";
}

/// One item in one of the five output forms. Categorical comparisons use
/// {=, ≠, ∈, ∉}, numerical ones {=, ≠, >, <, ≤, ≥}; bin memberships are
/// categorical ∈ items.
struct Item {
    ItemForm form = ItemForm::measurement_comparison;
    std::string subject;  // source, node or edge ID
    std::string context;  // bound node for neighbor properties, target node for edge presence
    std::string property;
    Comparison op = Comparison::eq;
    ValueKind kind = ValueKind::categorical;
    std::string value;

    bool valid() const {
        const bool shared = op == Comparison::eq || op == Comparison::ne;
        if (kind == ValueKind::categorical) return shared || op == Comparison::in || op == Comparison::not_in;
        return shared || op == Comparison::gt || op == Comparison::lt || op == Comparison::le || op == Comparison::ge;
    }

    std::string render() const {
        const std::string cmp = std::string(" ") + symbol(op) + " " + value;
        switch (form) {
            case ItemForm::measurement_comparison: return "sensor(" + subject + ").value" + cmp;
            case ItemForm::property_comparison:
                return (context.empty() ? "" : "(" + context + ":)-") + "(" + subject + ":)." + property + cmp;
            case ItemForm::node_label:
            case ItemForm::edge_label: return "(" + subject + ":" + value + ")";
            case ItemForm::edge_presence:
                return "(" + subject + ":) → (" + context + ":)" + (value == "present" ? "" : " absent");
        }
        return {};
    }
};

inline bool is_interval(const std::string& v) {
    return v.size() >= 2 && v.front() == '(' && (v.back() == ']' || v.back() == ')') &&
           v.find(", ") != std::string::npos;
}

inline Item item_of(const FeatureRegistry& registry, const ItemRef& ref) {
    const auto& g = registry.group(ref.group);
    const auto& d = g.descriptor;
    Item it;
    it.value = g.classes.at(ref.cls);
    it.op = is_interval(it.value) ? Comparison::in : Comparison::eq;
    switch (d.kind) {
        case FeatureKind::measurement:
            it.form = ItemForm::measurement_comparison;
            it.subject = d.a;
            break;
        case FeatureKind::node_property:
            it.form = ItemForm::property_comparison;
            it.subject = d.a;
            it.property = d.property;
            break;
        case FeatureKind::neighbor_property:
            it.form = ItemForm::property_comparison;
            it.subject = d.b;
            it.context = d.a;
            it.property = d.property;
            break;
        case FeatureKind::node_label:
            it.form = ItemForm::node_label;
            it.subject = d.a;
            break;
        case FeatureKind::edge_label:
            it.form = ItemForm::edge_label;
            it.subject = d.a;
            break;
        case FeatureKind::edge_presence:
            it.form = ItemForm::edge_presence;
            it.subject = d.a;
            it.context = d.b;
            break;
    }
    return it;
}

/// `(P1:).length ∈ (1, 2] ∧ … → sensor(s1).value ∈ (lo, hi]`
inline std::string render(const FeatureRegistry& registry, const Rule& rule) {
    std::string out;
    for (const auto& a : rule.antecedents) {
        if (!out.empty()) out += " ∧ ";
        out += item_of(registry, a).render();
    }
    return out + " → " + item_of(registry, rule.consequent).render();
}

// --- JSON lines ----------------------------------------------------------------

inline nlohmann::json to_json(const FeatureRegistry& registry, const Rule& rule) {
    auto item = [&](const ItemRef& r) {
        const auto& g = registry.group(r.group);
        return nlohmann::json{{"feature", g.descriptor.name()}, {"class", g.classes.at(r.cls)}};
    };
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["antecedents"] = nlohmann::json::array();
    for (const auto& a : rule.antecedents) j["antecedents"].push_back(item(a));
    j["consequent"] = item(rule.consequent);
    if (rule.metrics) {
        j["support"] = rule.metrics->support;
        j["confidence"] = opt(rule.metrics->confidence);
        j["lift"] = opt(rule.metrics->lift);
        j["leverage"] = rule.metrics->leverage;
        j["zhangs_metric"] = opt(rule.metrics->zhangs);
    } else {
        for (const char* k : {"support", "confidence", "lift", "leverage", "zhangs_metric"}) j[k] = nullptr;
    }
    return j;
}

inline Rule rule_from_json(const FeatureRegistry& registry, const nlohmann::json& j) {
    auto item = [&](const nlohmann::json& ij) {
        const auto desc = FeatureDescriptor::parse(ij.at("feature").get<std::string>());
        auto g = registry.find_group(desc);
        if (!g) throw InputError("rule: unknown feature '" + desc.name() + "'");
        auto c = registry.find_class(*g, ij.at("class").get<std::string>());
        if (!c) throw InputError("rule: unknown class for feature '" + desc.name() + "'");
        return ItemRef{static_cast<std::uint32_t>(*g), static_cast<std::uint32_t>(*c)};
    };
    try {
        std::vector<ItemRef> ants;
        for (const auto& a : j.at("antecedents")) ants.push_back(item(a));
        Rule r = make_rule(std::move(ants), item(j.at("consequent")));
        if (!j.at("support").is_null()) {
            auto opt = [&](const char* k) {
                return j.at(k).is_null() ? std::optional<double>() : std::optional<double>(j.at(k).get<double>());
            };
            r.metrics = RuleMetrics{j.at("support").get<double>(), opt("confidence"), opt("lift"),
                                    j.at("leverage").get<double>(), opt("zhangs_metric")};
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("rule: ") + e.what());
    }
}

inline void write_rules_jsonl(std::ostream& out, const FeatureRegistry& registry, const std::vector<Rule>& rules) {
    for (const auto& r : rules) out << to_json(registry, r).dump() << '\n';
}

}  // namespace semrl
