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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "test_util.hpp"

namespace semrl {
namespace {

using testing::registry_of;
using testing::transactions_of;

DiscretizedDataset one_source(const std::string& source, const std::vector<std::string>& classes) {
    DiscretizedDataset d;
    d.sources = {source};
    d.domains[source] = {"lo", "hi"};
    for (std::size_t i = 0; i < classes.size(); ++i) d.records.push_back({source, "t" + std::to_string(i), classes[i]});
    return d;
}

std::set<std::string> feature_names(const CategoricalTable& t) {
    std::set<std::string> out;
    for (const auto& f : t.features) out.insert(f.name());
    return out;
}

TEST(Registry, ContiguousBijectiveLayout) {
    const auto reg = registry_of({2, 3, 4});
    EXPECT_EQ(reg.width(), 9u);
    std::size_t expected_start = 0;
    for (std::size_t g = 0; g < reg.group_count(); ++g) {
        EXPECT_EQ(reg.group(g).start, expected_start);
        expected_start = reg.group(g).end;
        for (std::size_t c = 0; c < reg.group(g).size(); ++c) {
            const auto n = reg.neuron(g, c);
            EXPECT_EQ(reg.group_of(n), g);
            EXPECT_EQ(reg.class_of(n), c);
        }
    }
    EXPECT_EQ(expected_start, reg.width());
}

TEST(Registry, RejectsDegenerateGroups) {
    using G = std::vector<std::pair<FeatureDescriptor, std::vector<std::string>>>;
    EXPECT_THROW(FeatureRegistry(G{{FeatureDescriptor::measurement("a"), {"x"}}}), InputError);
    EXPECT_THROW(FeatureRegistry(G{{FeatureDescriptor::measurement("a"), {"x", "x"}}}), InputError);
    EXPECT_THROW(FeatureRegistry(G{{FeatureDescriptor::measurement("a"), {"x", "y"}},
                                   {FeatureDescriptor::measurement("a"), {"x", "y"}}}),
                 InputError);
}

TEST(Registry, JsonRoundTripKeepsHash) {
    const auto reg = registry_of({2, 3});
    const auto back = registry_from_json(to_json(reg));
    EXPECT_TRUE(back == reg);
    EXPECT_EQ(back.hash(), reg.hash());
    EXPECT_NE(registry_of({3, 2}).hash(), reg.hash());
}

TEST(Descriptor, NamesRoundTrip) {
    for (const auto& d : {FeatureDescriptor::measurement("s1"), FeatureDescriptor::node_property("P1", "length"),
                          FeatureDescriptor::neighbor_property("P1", "J1", "zone"), FeatureDescriptor::node_label("J1"),
                          FeatureDescriptor::edge_label("e1"), FeatureDescriptor::edge_presence("P1", "J1")})
        EXPECT_EQ(FeatureDescriptor::parse(d.name()), d);
    EXPECT_THROW(FeatureDescriptor::parse("bogus(a)"), InputError);
    EXPECT_THROW(FeatureDescriptor::parse("node_property(a)"), InputError);
}

TEST(OneHot, SingleGroup) {
    const auto d = transactions_of({2}, {{0}});
    EXPECT_EQ(std::vector<double>(d.row(0).begin(), d.row(0).end()), (std::vector<double>{1, 0}));
}

TEST(OneHot, TwoGroupsFiveWide) {
    const auto d = transactions_of({2, 3}, {{0, 0}});
    EXPECT_EQ(std::vector<double>(d.row(0).begin(), d.row(0).end()), (std::vector<double>{1, 0, 1, 0, 0}));
}

TEST(OneHot, RandomRoundTrip) {
    std::mt19937_64 rng(1);
    const std::vector<std::size_t> sizes{2, 3, 5, 2};
    const auto d = testing::random_transactions(sizes, 200, rng);
    for (std::size_t r = 0; r < d.size(); ++r) {
        const auto row = d.row(r);
        // independent decode: position of the single 1 inside each group
        std::size_t offset = 0;
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            int hot = -1, ones = 0;
            for (std::size_t c = 0; c < sizes[g]; ++c)
                if (row[offset + c] == 1.0) {
                    hot = static_cast<int>(c);
                    ++ones;
                }
            EXPECT_EQ(ones, 1);
            EXPECT_EQ(hot, static_cast<int>(d.class_at(r, g)));
            offset += sizes[g];
        }
        const auto back = decode_one_hot(d.registry(), row);
        EXPECT_TRUE(std::equal(back.begin(), back.end(), d.classes(r).begin()));
    }
}

TEST(OneHot, DecodeRejectsNonOneHot) {
    const auto reg = registry_of({2});
    EXPECT_THROW(decode_one_hot(reg, std::vector<double>{1, 1}), InputError);
    EXPECT_THROW(decode_one_hot(reg, std::vector<double>{0, 0}), InputError);
    EXPECT_THROW(decode_one_hot(reg, std::vector<double>{0.5, 0.5}), InputError);
}

TEST(OneHot, UnseenClassIsAnError) {
    CategoricalTable t;
    t.features = {FeatureDescriptor::measurement("a")};
    t.rows = {{"x"}, {"y"}};
    const auto reg = FeatureRegistry::build(t);
    t.rows.push_back({"z"});
    EXPECT_THROW(encode_one_hot(t, reg), InputError);
}

TEST(OneHot, CsvDumpRoundTrip) {
    std::mt19937_64 rng(2);
    const auto d = testing::random_transactions({3, 2, 4}, 50, rng);
    std::stringstream ss;
    write_transactions_csv(ss, d);
    const auto back = read_transactions_csv(ss);
    EXPECT_TRUE(back.registry() == d.registry());
    EXPECT_EQ(back.class_matrix(), d.class_matrix());
}

TEST(Corrupt, ZeroNoiseIsIdentity) {
    std::mt19937_64 rng(1);
    const std::vector<double> row{1, 0, 0, 1, 0};
    EXPECT_EQ(corrupt(row, 0.0, rng), row);
}

TEST(Corrupt, StaysInUnitInterval) {
    std::mt19937_64 rng(1);
    const std::vector<double> row{1, 0, 0.5, 1, 0};
    for (int i = 0; i < 1000; ++i)
        for (double v : corrupt(row, 2.0, rng)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
}

// A mirror generator replays the same normal draws (one fresh distribution
// per call, as corrupt does), so the perturbation can be measured before the
// clamp.
TEST(Corrupt, MeanAbsolutePerturbationMatchesHalfNormal) {
    std::mt19937_64 rng(123), mirror(123);
    const std::vector<double> row(1, 0.5);
    const double noise = 0.5;
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double out = corrupt(row, noise, rng)[0];
        const double raw = noise * std::normal_distribution<double>(0.0, 1.0)(mirror);
        EXPECT_DOUBLE_EQ(out, std::clamp(0.5 + raw, 0.0, 1.0));
        sum += std::abs(raw);
    }
    const double expected = noise * std::sqrt(2.0 / std::numbers::pi);
    EXPECT_NEAR(sum / n, expected, 0.005);
}

TEST(Enrich, DepthZeroNoPropertiesIsMeasurementOnly) {
    PropertyGraph g({{"n1", {}, {}}}, {});
    const auto t = enrich(one_source("s1", {"lo", "hi"}), g, Binding{{{"s1", "n1"}}}, 0);
    EXPECT_EQ(feature_names(t), (std::set<std::string>{"measurement(s1)"}));
    EXPECT_EQ(t.rows.size(), 2u);
}

TEST(Enrich, DepthZeroLabelAndProperty) {
    PropertyGraph g({{"n1", {"Pipe"}, {{"length", 3.0}}}}, {});
    const auto t = enrich(one_source("s1", {"lo", "hi", "lo"}), g, Binding{{{"s1", "n1"}}}, 0, 1);
    ASSERT_EQ(t.features.size(), 3u);
    EXPECT_EQ(t.features[1], FeatureDescriptor::node_label("n1"));
    EXPECT_EQ(t.features[2], FeatureDescriptor::node_property("n1", "length"));
    for (const auto& row : t.rows) {
        EXPECT_EQ(row[1], "Pipe");
        EXPECT_EQ(row[2], "(-inf, inf)");
    }
    EXPECT_EQ(t.rows[0][0], "lo");
    EXPECT_EQ(t.rows[1][0], "hi");
}

TEST(Enrich, AdjacentNodesDepthOne) {
    PropertyGraph g({{"a", {"Pipe"}, {{"zone", std::string("n")}}}, {"b", {"Junction"}, {{"zone", std::string("s")}}}},
                    {{"e", "a", "b", {"connected_to"}, {}}});
    DiscretizedDataset d;
    d.sources = {"s1", "s2"};
    d.domains = {{"s1", {"lo", "hi"}}, {"s2", {"lo", "hi"}}};
    for (int i = 0; i < 4; ++i) {
        d.records.push_back({"s1", "t" + std::to_string(i), i % 2 ? "hi" : "lo"});
        d.records.push_back({"s2", "t" + std::to_string(i), i < 2 ? "hi" : "lo"});
    }
    const auto t = enrich(d, g, Binding{{{"s1", "a"}, {"s2", "b"}}}, 1);
    // enumerated by hand: two measurements, each bound node's label and
    // zone, the neighbor's zone seen from each side, the shared edge's label
    // (listed once) and the edge presence in both directions; the
    // neighbor's label is the same node_label feature already present
    const std::set<std::string> expected{
        "measurement(s1)",          "measurement(s2)",          "node_label(a)",
        "node_label(b)",            "node_property(a).zone",    "node_property(b).zone",
        "neighbor_property(a,b).zone", "neighbor_property(b,a).zone", "edge_label(e)",
        "edge_presence(a,b)",       "edge_presence(b,a)"};
    EXPECT_EQ(feature_names(t), expected);
    ASSERT_EQ(t.rows.size(), 4u);
    const auto col = *t.column(FeatureDescriptor::neighbor_property("a", "b", "zone"));
    for (const auto& row : t.rows) EXPECT_EQ(row[col], "s");
}

TEST(Enrich, IncompleteTimestampsDropped) {
    PropertyGraph g({{"a", {}, {}}, {"b", {}, {}}}, {});
    DiscretizedDataset d;
    d.sources = {"s1", "s2"};
    d.records = {{"s1", "t1", "x"}, {"s2", "t1", "y"}, {"s1", "t2", "x"}};
    const auto t = enrich(d, g, Binding{{{"s1", "a"}, {"s2", "b"}}}, 1);
    EXPECT_EQ(t.timestamps, std::vector<std::string>{"t1"});
}

TEST(Enrich, UnboundSourceNamed) {
    PropertyGraph g({{"a", {}, {}}}, {});
    try {
        enrich(one_source("s9", {"lo"}), g, Binding{}, 1);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("s9"), std::string::npos);
    }
}

}  // namespace
}  // namespace semrl
