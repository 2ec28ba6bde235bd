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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"

namespace semrl {
namespace {

using testing::transactions_of;

// Two binary groups: X = (g0 = 1), Y = (g1 = 1).
const Rule kXY = make_rule({{0, 1}}, {1, 1});

TransactionSet binary_pairs(const std::vector<std::pair<int, int>>& rows) {
    std::vector<std::vector<std::uint32_t>> r;
    for (auto [x, y] : rows) r.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
    return transactions_of({2, 2}, r);
}

TEST(Rule, CanonicalForm) {
    const auto r = make_rule({{2, 0}, {0, 1}}, {1, 0});
    EXPECT_EQ(r.antecedents, (std::vector<ItemRef>{{0, 1}, {2, 0}}));
    EXPECT_THROW(make_rule({}, {1, 0}), InputError);
    EXPECT_THROW(make_rule({{1, 0}}, {1, 1}), InputError);
    EXPECT_THROW(make_rule({{0, 0}, {0, 1}}, {1, 1}), InputError);
}

TEST(Support, HalfOfFourRows) {
    const auto d = binary_pairs({{1, 1}, {1, 1}, {1, 0}, {0, 1}});
    EXPECT_DOUBLE_EQ(support(kXY, d), 0.5);
    EXPECT_DOUBLE_EQ(support(kXY, binary_pairs({{1, 1}, {1, 1}})), 1.0);
    EXPECT_DOUBLE_EQ(support(kXY, binary_pairs({{0, 1}, {1, 0}})), 0.0);
}

TEST(Confidence, ThreeOfFour) {
    const auto d = binary_pairs({{1, 1}, {1, 1}, {1, 1}, {1, 0}, {0, 1}, {0, 0}});
    EXPECT_DOUBLE_EQ(*confidence(kXY, d), 0.75);
    EXPECT_DOUBLE_EQ(*confidence(kXY, binary_pairs({{1, 1}, {0, 0}})), 1.0);
    EXPECT_FALSE(confidence(kXY, binary_pairs({{0, 1}, {0, 0}})));
}

TEST(Lift, IndependenceAndCoupling) {
    EXPECT_DOUBLE_EQ(*lift(kXY, binary_pairs({{0, 0}, {0, 1}, {1, 0}, {1, 1}})), 1.0);
    EXPECT_DOUBLE_EQ(*lift(kXY, binary_pairs({{1, 1}, {1, 1}, {0, 0}, {0, 0}})), 2.0);
    EXPECT_DOUBLE_EQ(*lift(kXY, binary_pairs({{1, 0}, {0, 1}})), 0.0);
}

TEST(Leverage, ClosedForms) {
    EXPECT_DOUBLE_EQ(leverage(kXY, binary_pairs({{0, 0}, {0, 1}, {1, 0}, {1, 1}})), 0.0);
    EXPECT_DOUBLE_EQ(leverage(kXY, binary_pairs({{1, 1}, {0, 0}})), 0.25);
    EXPECT_DOUBLE_EQ(leverage(kXY, binary_pairs({{1, 0}, {0, 1}})), -0.25);
}

TEST(Zhang, ClosedForms) {
    EXPECT_DOUBLE_EQ(*zhangs_metric(kXY, binary_pairs({{0, 0}, {0, 1}, {1, 0}, {1, 1}})), 0.0);
    EXPECT_DOUBLE_EQ(*zhangs_metric(kXY, binary_pairs({{1, 1}, {0, 0}})), 1.0);
    EXPECT_DOUBLE_EQ(*zhangs_metric(kXY, binary_pairs({{1, 0}, {0, 1}})), -1.0);
    // X everywhere leaves conf(not X -> Y) undefined
    EXPECT_FALSE(zhangs_metric(kXY, binary_pairs({{1, 0}, {1, 1}})));
}

// Naive recount: every metric from its definition, with its own loops.
TEST(Metrics, MatchNaiveRecount) {
    std::mt19937_64 rng(17);
    const std::vector<std::size_t> sizes{2, 3, 2, 4};
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = testing::random_transactions(sizes, 5 + rng() % 60, rng);
        const std::uint32_t cg = static_cast<std::uint32_t>(rng() % sizes.size());
        std::vector<ItemRef> ants;
        for (std::uint32_t g = 0; g < sizes.size(); ++g)
            if (g != cg && (ants.empty() || rng() % 2))
                ants.push_back({g, static_cast<std::uint32_t>(rng() % sizes[g])});
        const auto rule = make_rule(ants, {cg, static_cast<std::uint32_t>(rng() % sizes[cg])});

        double nx = 0, ny = 0, nxy = 0;
        const double n = static_cast<double>(d.size());
        for (std::size_t r = 0; r < d.size(); ++r) {
            bool x = true;
            for (const auto& a : ants) x = x && d.row(r)[d.registry().neuron(a.group, a.cls)] == 1.0;
            const bool y = d.row(r)[d.registry().neuron(rule.consequent.group, rule.consequent.cls)] == 1.0;
            nx += x;
            ny += y;
            nxy += x && y;
        }
        const auto m = evaluate(rule, d);
        EXPECT_EQ(m.support, nxy / n);
        EXPECT_EQ(m.leverage, nxy / n - (nx / n) * (ny / n));
        if (nx == 0) {
            EXPECT_FALSE(m.confidence);
            continue;
        }
        const double conf = nxy / nx;
        EXPECT_EQ(*m.confidence, conf);
        if (ny > 0) {
            EXPECT_EQ(*m.lift, conf / (ny / n));
        }
        if (nx < n) {
            const double conf_not = (ny - nxy) / (n - nx);
            const double denom = std::max(conf, conf_not);
            if (denom > 0) {
                EXPECT_EQ(*m.zhangs, (conf - conf_not) / denom);
            }
        }
    }
}

TEST(Overlap, SetCases) {
    const std::vector<Rule> a{make_rule({{0, 0}}, {1, 0}), make_rule({{0, 1}}, {1, 1}), make_rule({{1, 0}}, {0, 0}),
                              make_rule({{1, 1}}, {0, 1})};
    EXPECT_DOUBLE_EQ(*rule_overlap(a, a), 1.0);
    EXPECT_DOUBLE_EQ(*rule_overlap(a, {make_rule({{0, 0}}, {1, 1})}), 0.0);
    EXPECT_DOUBLE_EQ(*rule_overlap(a, {a[0], a[1], a[3], make_rule({{0, 0}}, {1, 1})}), 0.75);
    EXPECT_FALSE(rule_overlap({}, a));
}

TEST(Summary, ExcludesUndefinedRules) {
    const auto d = binary_pairs({{1, 1}, {1, 0}, {0, 1}, {0, 0}});
    auto r1 = kXY;
    r1.metrics = evaluate(r1, d);
    auto r2 = make_rule({{0, 0}}, {1, 0});
    r2.metrics = evaluate(r2, binary_pairs({{0, 0}, {0, 0}}));  // X everywhere: Zhang undefined
    const auto s = summarize({r1, r2});
    EXPECT_EQ(s.rule_count, 2u);
    EXPECT_EQ(s.undefined_count, 1u);
    EXPECT_DOUBLE_EQ(s.confidence, 0.5);
    EXPECT_EQ(summarize({}).rule_count, 0u);
}

TEST(Render, ItemForms) {
    FeatureRegistry reg({{FeatureDescriptor::node_property("P1", "length"), {"(-inf, 2]", "(2, inf)"}},
                         {FeatureDescriptor::measurement("s1"), {"(-inf, 1]", "(1, inf)"}},
                         {FeatureDescriptor::node_label("J1"), {"Junction", "Pipe"}},
                         {FeatureDescriptor::edge_presence("P1", "J1"), {"absent", "present"}},
                         {FeatureDescriptor::neighbor_property("P1", "J1", "zone"), {"north", "south"}}});
    EXPECT_EQ(render(reg, make_rule({{0, 1}}, {1, 0})), "(P1:).length ∈ (2, inf) → sensor(s1).value ∈ (-inf, 1]");
    EXPECT_EQ(render(reg, make_rule({{2, 0}, {3, 1}}, {4, 1})),
              "(J1:Junction) ∧ (P1:) → (J1:) → (P1:)-(J1:).zone = south");
}

TEST(Item, ComparisonDomains) {
    Item it;
    it.kind = ValueKind::categorical;
    it.op = Comparison::gt;
    EXPECT_FALSE(it.valid());
    it.op = Comparison::not_in;
    EXPECT_TRUE(it.valid());
    it.kind = ValueKind::numerical;
    EXPECT_FALSE(it.valid());
    it.op = Comparison::le;
    EXPECT_TRUE(it.valid());
}

TEST(Jsonl, RoundTrip) {
    const auto d = binary_pairs({{1, 1}, {1, 0}, {0, 1}, {0, 0}, {1, 1}});
    auto r = kXY;
    r.metrics = evaluate(r, d);
    auto bare = make_rule({{1, 0}}, {0, 0});
    std::stringstream ss;
    write_rules_jsonl(ss, d.registry(), {r, bare});
    std::string line;
    std::getline(ss, line);
    const auto back = rule_from_json(d.registry(), nlohmann::json::parse(line));
    EXPECT_EQ(back.key(), r.key());
    EXPECT_EQ(back.metrics->support, r.metrics->support);
    EXPECT_EQ(back.metrics->zhangs, r.metrics->zhangs);
    std::getline(ss, line);
    EXPECT_FALSE(rule_from_json(d.registry(), nlohmann::json::parse(line)).metrics);
}

}  // namespace
}  // namespace semrl
