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

#include <numeric>
#include <sstream>

#include "test_util.hpp"

namespace semrl {
namespace {

std::string dataset_bytes(const SynthData& d) {
    std::ostringstream ss;
    write_timeseries_csv(ss, d.dataset);
    return ss.str() + to_json(d.graph).dump() + to_json(d.binding).dump() + to_json(d.settings).dump();
}

TEST(EqualFrequency, SizesPartitionN) {
    EXPECT_EQ(equal_frequency_sizes(10, 5), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
    EXPECT_EQ(equal_frequency_sizes(7, 3), (std::vector<std::size_t>{3, 2, 2}));
    for (std::size_t n : {1u, 13u, 2000u})
        for (std::size_t k : {1u, 2u, 3u, 7u}) {
            const auto s = equal_frequency_sizes(n, k);
            ASSERT_EQ(s.size(), k);
            EXPECT_EQ(std::accumulate(s.begin(), s.end(), std::size_t{0}), n);
            EXPECT_LE(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()), 1u);
        }
}

TEST(Generate, SameSeedSameBytes) {
    const auto spec = testing::planted_suite(11);
    EXPECT_EQ(dataset_bytes(generate(spec)), dataset_bytes(generate(spec)));
    EXPECT_NE(dataset_bytes(generate(spec)), dataset_bytes(generate(testing::planted_suite(12))));
}

TEST(Generate, ShapeFollowsSpec) {
    auto spec = testing::planted_suite(1);
    spec.categorical_sources = 2;
    const auto d = generate(spec);
    EXPECT_EQ(d.dataset.sources.size(), 8u);
    EXPECT_EQ(d.dataset.records.size(), 8u * 2000u);
    EXPECT_EQ(d.graph.nodes().size(), 10u);
    EXPECT_EQ(d.binding.source_to_node.size(), 8u);
    EXPECT_TRUE(validate_graph(d.graph, d.schema).conforms());
}

// Recount straight from the prepared rows, without resolve_planted's lookup
// beyond naming the two groups.
TEST(Generate, PlantedRuleHoldsExactly) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto spec = testing::planted_suite(seed);
        const auto p = prepare(generate(spec), PrepareConfig{});
        const auto rule = resolve_planted(spec.planted[0], p);
        ASSERT_TRUE(rule);
        const auto& d = p.transactions;
        std::size_t x = 0, xy = 0;
        for (std::size_t r = 0; r < d.size(); ++r) {
            const bool hx = d.class_at(r, rule->antecedents[0].group) == rule->antecedents[0].cls;
            x += hx;
            xy += hx && d.class_at(r, rule->consequent.group) == rule->consequent.cls;
        }
        EXPECT_EQ(x, xy);
        EXPECT_EQ(xy, 600u);
        EXPECT_EQ(*confidence(*rule, d), 1.0);
    }
}

TEST(Generate, PartialConfidenceIsHit) {
    auto spec = testing::planted_suite(2);
    spec.planted[0].confidence = 0.75;
    spec.planted[0].support = 0.225;  // 600 antecedent rows, 450 hits
    const auto p = prepare(generate(spec), PrepareConfig{});
    const auto rule = resolve_planted(spec.planted[0], p);
    ASSERT_TRUE(rule);
    EXPECT_DOUBLE_EQ(*confidence(*rule, p.transactions), 0.75);
    EXPECT_DOUBLE_EQ(support(*rule, p.transactions), 0.225);
}

TEST(Generate, NoPlantedRulesStaysUnderFalsePositiveBudget) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        spec.sources = 20;
        spec.transactions = 1000;
        const auto p = prepare(generate(spec), PrepareConfig{});
        EXPECT_LE(fp_growth(p.transactions, 0.01, 0.9).size(), 2u) << "seed " << seed;
    }
}

TEST(Generate, RejectsInfeasibleSpecs) {
    auto spec = testing::planted_suite(1);
    spec.planted[0].antecedents[0].source = "s99";
    EXPECT_THROW(generate(spec), InputError);

    spec = testing::planted_suite(1);
    spec.planted[0].support = 0.9;  // bin 0 of 5 cannot hold 90% of the rows
    EXPECT_THROW(generate(spec), InputError);

    spec = testing::planted_suite(1);
    spec.planted.push_back(PlantedRule{{{"s3", 0}}, {"s2", 2}, 1.0, 0.3});
    EXPECT_THROW(generate(spec), InputError);  // two rules on one consequent

    spec = testing::planted_suite(1);
    spec.planted.push_back(PlantedRule{{{"s2", 1}}, {"s4", 0}, 1.0, 0.3});
    EXPECT_THROW(generate(spec), InputError);  // consequent reused as antecedent

    spec = testing::planted_suite(1);
    spec.bins = 1;
    EXPECT_THROW(generate(spec), InputError);
}

TEST(GraphTemplate, ParsesNames) {
    EXPECT_EQ(parse_graph_template("chain"), GraphTemplate::chain);
    EXPECT_THROW(parse_graph_template("moebius"), InputError);
}

}  // namespace
}  // namespace semrl
