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

#include <map>
#include <random>

#include "test_util.hpp"

namespace semrl {
namespace {

using testing::registry_of;

/// Returns a fixed output for one probe and uniform groups otherwise.
struct StubModel {
    FeatureRegistry registry;
    std::vector<double> probe;
    std::vector<double> answer;

    std::vector<double> forward(std::span<const double> x) const {
        if (std::equal(x.begin(), x.end(), probe.begin(), probe.end())) return answer;
        std::vector<double> out(x.size());
        for (const auto& g : registry.groups())
            for (std::size_t i = g.start; i < g.end; ++i) out[i] = 1.0 / static_cast<double>(g.size());
        return out;
    }
};

StubModel worked_example() {
    const auto reg = registry_of({2, 3});
    return {reg, make_test_vector(reg, {{0, 0}}).values, {0.8, 0.2, 0.9, 0.04, 0.06}};
}

TEST(TestVector, MarkFirstGroup) {
    const auto tv = make_test_vector(registry_of({2, 3}), {{0, 0}});
    ASSERT_EQ(tv.values.size(), 5u);
    EXPECT_EQ(tv.values[0], 1.0);
    EXPECT_EQ(tv.values[1], 0.0);
    for (int i = 2; i < 5; ++i) EXPECT_DOUBLE_EQ(tv.values[i], 1.0 / 3.0);
}

TEST(TestVector, NoMarksIsUniform) {
    const auto tv = make_test_vector(registry_of({2, 3}), {});
    EXPECT_EQ(tv.values, (std::vector<double>{0.5, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3}));
}

TEST(TestVector, FullyMarked) {
    const auto tv = make_test_vector(registry_of({2, 3}), {{1, 0}, {0, 0}});
    EXPECT_EQ(tv.values, (std::vector<double>{1, 0, 1, 0, 0}));
    EXPECT_THROW(make_test_vector(registry_of({2, 3}), {{0, 0}, {0, 1}}), InputError);
}

TEST(Extract, WorkedExampleYieldsOneRule) {
    const auto m = worked_example();
    ExtractionConfig c;
    c.similarity_threshold = 0.8;
    const auto r = extract_rules(m, m.registry, {{0, 0}}, c);
    ASSERT_EQ(r.rules.size(), 1u);
    EXPECT_EQ(r.rules[0].key(), make_rule({{0, 0}}, {1, 0}).key());
}

TEST(Extract, ThresholdAboveEveryProbability) {
    const auto m = worked_example();
    ExtractionConfig c;
    c.similarity_threshold = 0.95;
    EXPECT_TRUE(extract_rules(m, m.registry, {{0, 0}}, c).rules.empty());
}

TEST(Extract, ThresholdIsStrict) {
    auto m = worked_example();
    m.answer = {1.0, 0.0, 0.8, 0.1, 0.1};
    ExtractionConfig c;
    c.similarity_threshold = 0.8;
    EXPECT_TRUE(extract_rules(m, m.registry, {{0, 0}}, c).rules.empty());
}

TEST(Extract, TiesAreSkipped) {
    auto m = worked_example();
    m.answer = {1.0, 0.0, 0.45, 0.45, 0.1};
    ExtractionConfig c;
    c.similarity_threshold = 0.3;
    EXPECT_TRUE(extract_rules(m, m.registry, {{0, 0}}, c).rules.empty());
}

TEST(Extract, RejectsBadConfig) {
    const auto m = worked_example();
    ExtractionConfig c;
    c.similarity_threshold = 1.0;
    EXPECT_THROW(extract_rules(m, m.registry, {{0, 0}}, c), InputError);
    c.similarity_threshold = 0.5;
    c.max_antecedents = 0;
    EXPECT_THROW(extract_rules(m, m.registry, {{0, 0}}, c), InputError);
}

TEST(Combinations, CountsAndOrder) {
    const auto c = group_combinations(4, 2);
    EXPECT_EQ(c.size(), 4u + 6u);
    EXPECT_EQ(c.front(), (std::vector<std::uint32_t>{0}));
    EXPECT_EQ(c[4], (std::vector<std::uint32_t>{0, 1}));
    EXPECT_EQ(c.back(), (std::vector<std::uint32_t>{2, 3}));
    EXPECT_EQ(group_combinations(3, 5).size(), 7u);
}

/// Records every probe it sees; output uniform.
struct CountingModel {
    FeatureRegistry registry;
    mutable std::vector<std::vector<double>> seen;
    std::vector<double> forward(std::span<const double> x) const {
        seen.emplace_back(x.begin(), x.end());
        return StubModel{registry, {}, {}}.forward(x);
    }
};

TEST(Extract, EachDistinctProbeOnce) {
    CountingModel m{registry_of({2, 2, 2}), {}};
    ExtractionConfig c;
    c.max_antecedents = 2;
    const std::vector<std::vector<std::uint32_t>> rows{{0, 0, 0}, {0, 0, 1}, {0, 0, 0}};
    const auto r = extract_rules(m, m.registry, rows, c);
    // singles: g0=0, g1=0, g2=0, g2=1; pairs: (0,0|g0g1), (0,0|g0g2), (0,1|g0g2), (0,0|g1g2), (0,1|g1g2)
    EXPECT_EQ(r.vectors_evaluated, 9u);
    EXPECT_EQ(m.seen.size(), 9u);
    std::set<std::vector<double>> distinct(m.seen.begin(), m.seen.end());
    EXPECT_EQ(distinct.size(), 9u);
}

TEST(Extract, ThreadCountDoesNotChangeRules) {
    std::mt19937_64 rng(8);
    const auto d = testing::random_transactions({2, 3, 2, 3}, 300, rng);
    TrainConfig tc;
    tc.epochs = 3;
    const auto model = train(d, tc).model;
    ExtractionConfig c;
    c.similarity_threshold = 0.4;
    c.max_antecedents = 2;
    const auto one = extract_rules(model, d, c);
    c.threads = 4;
    const auto four = extract_rules(model, d, c);
    ASSERT_EQ(one.rules.size(), four.rules.size());
    for (std::size_t i = 0; i < one.rules.size(); ++i) EXPECT_EQ(one.rules[i].key(), four.rules[i].key());
}

TEST(Extract, ExpiredDeadlineThrows) {
    const auto m = worked_example();
    ExtractionConfig c;
    c.deadline = Deadline(std::chrono::duration<double>(-1.0));
    EXPECT_THROW(extract_rules(m, m.registry, {{0, 0}}, c), TimeoutError);
}

// Oracle: a model trained to reproduce the one transaction t predicts t
// for every other group, so the rule set is g(t_g) -> h(t_h) for all g != h.
TEST(Extract, MemorisedTransactionGivesAllPairRules) {
    const std::vector<std::uint32_t> t{1, 0, 2, 1};
    const auto d = testing::transactions_of({2, 2, 3, 2}, std::vector<std::vector<std::uint32_t>>(2000, t));
    TrainConfig tc;
    tc.noise_factor = 0.0;
    const auto model = train(d, tc).model;
    ExtractionConfig c;
    c.similarity_threshold = 0.8;
    const auto r = extract_rules(model, d, c);
    std::set<std::pair<std::vector<ItemRef>, ItemRef>> expected, got;
    for (std::uint32_t g = 0; g < t.size(); ++g)
        for (std::uint32_t h = 0; h < t.size(); ++h)
            if (g != h) expected.insert(make_rule({{g, t[g]}}, {h, t[h]}).key());
    for (const auto& rule : r.rules) got.insert(rule.key());
    EXPECT_EQ(got, expected);
}

TEST(AttachMetrics, DropsNeverOccurringAntecedent) {
    const auto d = testing::transactions_of({2, 2}, {{0, 0}, {0, 1}});
    auto out = attach_metrics({make_rule({{0, 1}}, {1, 0}), make_rule({{0, 0}}, {1, 0})}, d);
    EXPECT_EQ(out.dropped, 1u);
    ASSERT_EQ(out.rules.size(), 1u);
    EXPECT_DOUBLE_EQ(*out.rules[0].metrics->confidence, 0.5);
    EXPECT_TRUE(attach_metrics({}, d).rules.empty());
}

TEST(AttachMetrics, EqualsBruteForceRecount) {
    std::mt19937_64 rng(12);
    const auto d = testing::random_transactions({2, 3, 2}, 100, rng);
    std::vector<Rule> rules;
    for (std::uint32_t a = 0; a < 2; ++a)
        for (std::uint32_t c = 0; c < 3; ++c) rules.push_back(make_rule({{0, a}}, {1, c}));
    const auto out = attach_metrics(rules, d);
    for (const auto& r : out.rules) {
        std::size_t x = 0, xy = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const bool hx = d.class_at(i, 0) == r.antecedents[0].cls;
            x += hx;
            xy += hx && d.class_at(i, 1) == r.consequent.cls;
        }
        EXPECT_EQ(*r.metrics->confidence, static_cast<double>(xy) / static_cast<double>(x));
        EXPECT_EQ(r.metrics->support, static_cast<double>(xy) / 100.0);
    }
}

}  // namespace
}  // namespace semrl
