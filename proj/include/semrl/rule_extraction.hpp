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
#include <concepts>
#include <cstdint>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "semrl/error.hpp"
#include "semrl/rule_model.hpp"
#include "semrl/transactions.hpp"

namespace semrl {

/// Anything that maps a registry-width probability vector to a
/// registry-width reconstruction.
template <class M>
concept Reconstructor = requires(const M& m, std::span<const double> x) {
    { m.forward(x) } -> std::convertible_to<std::vector<double>>;
};

/// Probe input: marked groups are one-hot on the chosen class, every other
/// group holds 1/group_size on each class.
struct TestVector {
    std::vector<double> values;
    std::vector<ItemRef> marked;
};

inline TestVector make_test_vector(const FeatureRegistry& registry, std::vector<ItemRef> assignments) {
    std::sort(assignments.begin(), assignments.end());
    TestVector tv;
    tv.values.assign(registry.width(), 0.0);
    for (const auto& g : registry.groups())
        for (std::size_t i = g.start; i < g.end; ++i) tv.values[i] = 1.0 / static_cast<double>(g.size());
    for (std::size_t k = 0; k < assignments.size(); ++k) {
        const auto& a = assignments[k];
        if (k && assignments[k - 1].group == a.group)
            throw InputError("test vector: group " + std::to_string(a.group) + " assigned twice");
        if (a.group >= registry.group_count()) throw InputError("test vector: group index out of range");
        const auto& g = registry.group(a.group);
        for (std::size_t i = g.start; i < g.end; ++i) tv.values[i] = 0.0;
        tv.values[registry.neuron(a.group, a.cls)] = 1.0;
    }
    tv.marked = std::move(assignments);
    return tv;
}

struct ExtractionConfig {
    double similarity_threshold = 0.8;
    int max_antecedents = 1;
    unsigned threads = 1;
    Deadline deadline;
};

struct ExtractionResult {
    std::vector<Rule> rules;
    std::size_t vectors_evaluated = 0;
};

/// Every non-empty subset of {0..n-1} with at most `k` elements, smaller
/// subsets first, lexicographic within a size.
inline std::vector<std::vector<std::uint32_t>> group_combinations(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::uint32_t>> out;
    for (std::size_t size = 1; size <= std::min(k, n); ++size) {
        std::vector<std::uint32_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = static_cast<std::uint32_t>(i);
        while (true) {
            out.push_back(idx);
            std::size_t i = size;
            while (i > 0 && idx[i - 1] == n - size + i - 1) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return out;
}

/// Distinct class rows of `d`, sorted.
inline std::vector<std::vector<std::uint32_t>> unique_rows(const TransactionSet& d) {
    std::set<std::vector<std::uint32_t>> rows;
    for (std::size_t r = 0; r < d.size(); ++r) {
        auto c = d.classes(r);
        rows.emplace(c.begin(), c.end());
    }
    return {rows.begin(), rows.end()};
}

/// Probes `model` with one test vector per distinct (row, antecedent group
/// combination) assignment and emits X -> (g = c) for every non-antecedent
/// group g whose unique most probable class c exceeds the threshold.
template <Reconstructor M>
ExtractionResult extract_rules(const M& model, const FeatureRegistry& registry,
                               const std::vector<std::vector<std::uint32_t>>& rows, const ExtractionConfig& config) {
    if (!(config.similarity_threshold > 0.0 && config.similarity_threshold < 1.0))
        throw InputError("similarity threshold must lie in (0, 1)");
    if (config.max_antecedents < 1) throw InputError("max_antecedents must be >= 1");

    const auto combos = group_combinations(registry.group_count(), static_cast<std::size_t>(config.max_antecedents));
    std::set<std::vector<ItemRef>> tested;
    std::vector<std::vector<ItemRef>> pending;
    for (const auto& row : rows) {
        if (row.size() != registry.group_count()) throw InputError("extract: row width does not match registry");
        config.deadline.check("extract");
        for (const auto& combo : combos) {
            std::vector<ItemRef> marks;
            marks.reserve(combo.size());
            for (auto g : combo) marks.push_back({g, row[g]});
            if (tested.insert(marks).second) pending.push_back(std::move(marks));
        }
    }

    auto probe = [&](const std::vector<ItemRef>& marks, std::vector<Rule>& out) {
        const auto tv = make_test_vector(registry, marks);
        const std::vector<double> output = model.forward(tv.values);
        if (output.size() != registry.width()) throw InputError("extract: model output width mismatch");
        std::size_t next_mark = 0;
        for (std::uint32_t g = 0; g < registry.group_count(); ++g) {
            if (next_mark < marks.size() && marks[next_mark].group == g) {
                ++next_mark;
                continue;
            }
            const auto& grp = registry.group(g);
            std::size_t best = grp.start;
            bool tie = false;
            for (std::size_t i = grp.start + 1; i < grp.end; ++i) {
                if (output[i] > output[best]) {
                    best = i;
                    tie = false;
                } else if (output[i] == output[best]) {
                    tie = true;
                }
            }
            if (tie || !(output[best] > config.similarity_threshold)) continue;
            out.push_back(Rule{marks, ItemRef{g, static_cast<std::uint32_t>(best - grp.start)}, std::nullopt});
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(config.threads, pending.size()));
    std::vector<std::vector<Rule>> found(workers);
    auto run = [&](std::size_t w) {
        const std::size_t lo = pending.size() * w / workers;
        const std::size_t hi = pending.size() * (w + 1) / workers;
        for (std::size_t i = lo; i < hi; ++i) {
            if ((i & 255) == 0) config.deadline.check("extract");
            probe(pending[i], found[w]);
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    run(w);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    ExtractionResult result;
    result.vectors_evaluated = pending.size();
    std::set<std::pair<std::vector<ItemRef>, ItemRef>> keys;
    for (auto& chunk : found)
        for (auto& r : chunk)
            if (keys.insert(r.key()).second) result.rules.push_back(std::move(r));
    sort_rules(result.rules);
    return result;
}

template <Reconstructor M>
ExtractionResult extract_rules(const M& model, const TransactionSet& transactions, const ExtractionConfig& config) {
    return extract_rules(model, transactions.registry(), unique_rows(transactions), config);
}

struct AnnotatedRules {
    std::vector<Rule> rules;
    std::size_t dropped = 0;  // antecedent never occurs, confidence undefined
};

/// Counts every metric over `transactions`; rules with undefined confidence
/// are dropped and tallied.
inline AnnotatedRules attach_metrics(std::vector<Rule> rules, const TransactionSet& transactions) {
    AnnotatedRules out;
    if (rules.empty()) return out;
    if (transactions.empty()) throw InputError("attach_metrics: no transactions");
    for (auto& r : rules) {
        r.metrics = evaluate(r, transactions);
        if (!r.metrics->confidence) {
            ++out.dropped;
            continue;
        }
        out.rules.push_back(std::move(r));
    }
    return out;
}

}  // namespace semrl
