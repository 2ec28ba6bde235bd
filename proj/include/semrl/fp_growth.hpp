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
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "semrl/error.hpp"
#include "semrl/rule_model.hpp"
#include "semrl/transactions.hpp"

namespace semrl {

using ItemId = std::uint32_t;
using Itemset = std::vector<ItemId>;  // sorted, unique

/// Plain market-basket view: each row is a sorted set of item IDs.
struct ItemDatabase {
    std::vector<Itemset> rows;

    std::size_t size() const { return rows.size(); }
};

/// Items are neuron indices of the registry.
inline ItemDatabase to_item_database(const TransactionSet& d) {
    ItemDatabase db;
    db.rows.reserve(d.size());
    const auto& reg = d.registry();
    for (std::size_t r = 0; r < d.size(); ++r) {
        Itemset row;
        for (std::size_t g = 0; g < reg.group_count(); ++g) row.push_back(static_cast<ItemId>(reg.neuron(g, d.class_at(r, g))));
        db.rows.push_back(std::move(row));
    }
    return db;
}

struct ItemsetRule {
    Itemset antecedent;
    ItemId consequent = 0;
    RuleMetrics metrics;

    std::pair<Itemset, ItemId> key() const { return {antecedent, consequent}; }
};

using FrequentItemsets = std::map<Itemset, std::size_t>;

namespace detail {

inline bool frequent_enough(std::size_t count, std::size_t n, double min_support) {
    return static_cast<double>(count) / static_cast<double>(n) >= min_support;
}

inline void check_thresholds(double min_support, double min_confidence) {
    if (!(min_support > 0.0 && min_support <= 1.0)) throw InputError("min_support must lie in (0, 1]");
    if (!(min_confidence > 0.0 && min_confidence <= 1.0)) throw InputError("min_confidence must lie in (0, 1]");
}

/// Single-consequent rules from itemsets of size >= 2, counts looked up in
/// the frequent-itemset table (every subset of a frequent set is frequent).
inline std::vector<ItemsetRule> rules_from_itemsets(const FrequentItemsets& freq, std::size_t n,
                                                    double min_confidence) {
    std::vector<ItemsetRule> out;
    for (const auto& [set, count] : freq) {
        if (set.size() < 2) continue;
        for (std::size_t k = 0; k < set.size(); ++k) {
            Itemset x;
            for (std::size_t j = 0; j < set.size(); ++j)
                if (j != k) x.push_back(set[j]);
            RuleCounts c{n, freq.at(x), freq.at(Itemset{set[k]}), count};
            auto m = metrics_from_counts(c);
            if (*m.confidence >= min_confidence) out.push_back({std::move(x), set[k], m});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    return out;
}

}  // namespace detail

/// Prefix tree over frequency-ordered transactions. Nodes live in one
/// vector; node 0 is the root.
class FPTree {
public:
    struct Node {
        ItemId item = 0;
        std::size_t count = 0;
        std::int64_t parent = -1;
        std::int64_t next = -1;  // next node carrying the same item
        std::vector<std::int64_t> children;
    };

    struct HeaderEntry {
        std::size_t total = 0;
        std::int64_t head = -1;
        std::int64_t tail = -1;
    };

    /// Builds the tree from weighted paths, keeping items whose weighted
    /// count passes `keep`. Items are ordered by descending count, ties by
    /// ascending ID.
    template <class Keep>
    FPTree(const std::vector<std::pair<Itemset, std::size_t>>& paths, Keep keep) {
        std::map<ItemId, std::size_t> counts;
        for (const auto& [items, w] : paths)
            for (auto i : items) counts[i] += w;
        for (const auto& [item, c] : counts)
            if (keep(c)) order_.push_back(item);
        std::sort(order_.begin(), order_.end(), [&](ItemId a, ItemId b) {
            return counts[a] != counts[b] ? counts[a] > counts[b] : a < b;
        });
        for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = r;
        nodes_.emplace_back();
        Itemset filtered;
        for (const auto& [items, w] : paths) {
            filtered.clear();
            for (auto i : items)
                if (rank_.count(i)) filtered.push_back(i);
            std::sort(filtered.begin(), filtered.end(), [&](ItemId a, ItemId b) { return rank_[a] < rank_[b]; });
            insert(filtered, w);
        }
    }

    bool empty() const { return order_.empty(); }
    const std::vector<ItemId>& order() const { return order_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const HeaderEntry& header(ItemId item) const { return header_.at(item); }

    /// Prefix paths (root side first, excluding `item`) for every node of
    /// `item`, weighted by that node's count.
    std::vector<std::pair<Itemset, std::size_t>> conditional_base(ItemId item) const {
        std::vector<std::pair<Itemset, std::size_t>> base;
        for (auto n = header_.at(item).head; n != -1; n = nodes_[static_cast<std::size_t>(n)].next) {
            const auto& node = nodes_[static_cast<std::size_t>(n)];
            Itemset path;
            for (auto p = node.parent; p > 0; p = nodes_[static_cast<std::size_t>(p)].parent)
                path.push_back(nodes_[static_cast<std::size_t>(p)].item);
            std::reverse(path.begin(), path.end());
            if (!path.empty()) base.emplace_back(std::move(path), node.count);
        }
        return base;
    }

private:
    void insert(const Itemset& items, std::size_t weight) {
        std::int64_t cur = 0;
        for (auto item : items) {
            std::int64_t child = -1;
            for (auto c : nodes_[static_cast<std::size_t>(cur)].children)
                if (nodes_[static_cast<std::size_t>(c)].item == item) {
                    child = c;
                    break;
                }
            if (child == -1) {
                child = static_cast<std::int64_t>(nodes_.size());
                Node n;
                n.item = item;
                n.parent = cur;
                nodes_.push_back(std::move(n));
                nodes_[static_cast<std::size_t>(cur)].children.push_back(child);
                auto& h = header_[item];
                if (h.tail == -1)
                    h.head = child;
                else
                    nodes_[static_cast<std::size_t>(h.tail)].next = child;
                h.tail = child;
            }
            nodes_[static_cast<std::size_t>(child)].count += weight;
            header_[item].total += weight;
            cur = child;
        }
    }

    std::vector<Node> nodes_;
    std::vector<ItemId> order_;
    std::map<ItemId, std::size_t> rank_;
    std::map<ItemId, HeaderEntry> header_;
};

namespace detail {

template <class Keep>
void mine_tree(const FPTree& tree, const Itemset& suffix, Keep keep, FrequentItemsets& out, const Deadline& deadline) {
    deadline.check("fp_growth");
    for (auto it = tree.order().rbegin(); it != tree.order().rend(); ++it) {
        Itemset set = suffix;
        set.push_back(*it);
        std::sort(set.begin(), set.end());
        out[set] = tree.header(*it).total;
        auto base = tree.conditional_base(*it);
        if (base.empty()) continue;
        FPTree conditional(base, keep);
        if (!conditional.empty()) mine_tree(conditional, set, keep, out, deadline);
    }
}

}  // namespace detail

/// All frequent itemsets via FP-tree pattern growth.
inline FrequentItemsets fp_growth_itemsets(const ItemDatabase& db, double min_support, const Deadline& deadline = {}) {
    if (db.rows.empty()) throw InputError("fp_growth: empty dataset");
    const std::size_t n = db.size();
    auto keep = [n, min_support](std::size_t c) { return detail::frequent_enough(c, n, min_support); };
    std::vector<std::pair<Itemset, std::size_t>> paths;
    paths.reserve(n);
    for (const auto& r : db.rows) paths.emplace_back(r, 1);
    FPTree tree(paths, keep);
    FrequentItemsets out;
    detail::mine_tree(tree, {}, keep, out, deadline);
    return out;
}

inline std::vector<ItemsetRule> fp_growth(const ItemDatabase& db, double min_support, double min_confidence,
                                          const Deadline& deadline = {}) {
    detail::check_thresholds(min_support, min_confidence);
    return detail::rules_from_itemsets(fp_growth_itemsets(db, min_support, deadline), db.size(), min_confidence);
}

inline constexpr std::size_t kBruteForceMaxItems = 16;

/// Exhaustive oracle: counts every subset of the distinct items directly.
inline std::vector<ItemsetRule> brute_force_mine(const ItemDatabase& db, double min_support, double min_confidence) {
    detail::check_thresholds(min_support, min_confidence);
    if (db.rows.empty()) throw InputError("brute_force_mine: empty dataset");
    std::set<ItemId> distinct;
    for (const auto& r : db.rows) distinct.insert(r.begin(), r.end());
    if (distinct.size() > kBruteForceMaxItems)
        throw InputError("brute_force_mine: " + std::to_string(distinct.size()) + " distinct items exceeds limit of " +
                         std::to_string(kBruteForceMaxItems));
    const std::vector<ItemId> items(distinct.begin(), distinct.end());
    std::vector<std::uint32_t> masks;
    for (const auto& r : db.rows) {
        std::uint32_t m = 0;
        for (auto i : r) m |= 1u << (std::lower_bound(items.begin(), items.end(), i) - items.begin());
        masks.push_back(m);
    }
    const std::size_t n = db.size();
    std::vector<std::size_t> count(std::size_t{1} << items.size(), 0);
    for (std::uint32_t s = 1; s < count.size(); ++s)
        for (auto m : masks) count[s] += (m & s) == s;

    std::vector<ItemsetRule> out;
    for (std::uint32_t s = 1; s < count.size(); ++s) {
        if (std::popcount(s) < 2 || !detail::frequent_enough(count[s], n, min_support)) continue;
        for (std::size_t k = 0; k < items.size(); ++k) {
            const std::uint32_t y = 1u << k;
            if (!(s & y)) continue;
            auto m = metrics_from_counts({n, count[s & ~y], count[y], count[s]});
            if (*m.confidence < min_confidence) continue;
            ItemsetRule r;
            for (std::size_t j = 0; j < items.size(); ++j)
                if ((s & ~y) & (1u << j)) r.antecedent.push_back(items[j]);
            r.consequent = items[k];
            r.metrics = m;
            out.push_back(std::move(r));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    return out;
}

/// Maps neuron-item rules back onto registry groups.
inline std::vector<Rule> to_rules(const FeatureRegistry& registry, const std::vector<ItemsetRule>& rules) {
    std::vector<Rule> out;
    out.reserve(rules.size());
    auto ref = [&](ItemId i) {
        return ItemRef{static_cast<std::uint32_t>(registry.group_of(i)), static_cast<std::uint32_t>(registry.class_of(i))};
    };
    for (const auto& r : rules) {
        std::vector<ItemRef> ants;
        for (auto i : r.antecedent) ants.push_back(ref(i));
        Rule rule = make_rule(std::move(ants), ref(r.consequent));
        rule.metrics = r.metrics;
        out.push_back(std::move(rule));
    }
    sort_rules(out);
    return out;
}

inline std::vector<Rule> fp_growth(const TransactionSet& d, double min_support, double min_confidence,
                                   const Deadline& deadline = {}) {
    return to_rules(d.registry(), fp_growth(to_item_database(d), min_support, min_confidence, deadline));
}

inline std::vector<Rule> brute_force_mine(const TransactionSet& d, double min_support, double min_confidence) {
    return to_rules(d.registry(), brute_force_mine(to_item_database(d), min_support, min_confidence));
}

}  // namespace semrl
