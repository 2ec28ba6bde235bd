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
#include <random>

#include "test_util.hpp"

namespace semrl {
namespace {

using testing::registry_of;

/// Central-difference estimate of d loss / d parameter for every weight and
/// bias, in layer order.
std::vector<double> numeric_gradient(AutoencoderModel model, const std::vector<double>& x,
                                     const std::vector<double>& t, double h) {
    std::vector<double> out;
    auto loss = [&] { return bce_loss(model.forward(x), t); };
    for (auto& layer : model.mutable_layers())
        for (auto* params : {&layer.weights, &layer.bias})
            for (auto& p : *params) {
                const double keep = p;
                p = keep + h;
                const double up = loss();
                p = keep - h;
                const double down = loss();
                p = keep;
                out.push_back((up - down) / (2.0 * h));
            }
    return out;
}

std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (const auto& l : g) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

TEST(Bce, PerfectReconstructionIsNearZero) {
    const std::vector<double> t{1, 0, 0, 1, 0};
    EXPECT_LE(bce_loss(t, t), 1e-6);
}

TEST(Bce, UniformHalfIsLn2) {
    const std::vector<double> p(4, 0.5), t{1, 0, 0, 1};
    EXPECT_NEAR(bce_loss(p, t), std::log(2.0), 1e-12);
}

TEST(Bce, WorkedFiveComponentExample) {
    const std::vector<double> p{0.8, 0.2, 0.9, 0.05, 0.05}, t{1, 0, 1, 0, 0};
    // term by term: -ln 0.8, -ln 0.8, -ln 0.9, -ln 0.95, -ln 0.95
    const double terms[] = {0.22314355131420976, 0.22314355131420976, 0.10536051565782628, 0.05129329438755058,
                            0.05129329438755058};
    double mean = 0.0;
    for (double v : terms) mean += v / 5.0;
    EXPECT_NEAR(bce_loss(p, t), mean, 1e-12);
}

TEST(Bce, WidthMismatchThrows) {
    EXPECT_THROW(bce_loss(std::vector<double>{0.5}, std::vector<double>{1, 0}), InputError);
}

TEST(Autoencoder, DefaultShapeIsUnderComplete) {
    const AutoencoderModel m(registry_of({2, 3, 4}), std::vector<std::size_t>{}, 1);
    EXPECT_EQ(m.hidden_dims(), (std::vector<std::size_t>{5, 3}));
    ASSERT_EQ(m.layers().size(), 4u);
    EXPECT_EQ(m.layers()[1].out, 3u);
    EXPECT_EQ(m.layers()[2].out, 5u);
    EXPECT_EQ(m.layers().back().out, 9u);
    EXPECT_THROW(AutoencoderModel(registry_of({2, 2}), std::vector<std::size_t>{4}, 1), InputError);
}

TEST(Autoencoder, GroupsSumToOne) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const AutoencoderModel m(registry_of({2, 3, 4}), std::vector<std::size_t>{}, rng());
        std::vector<double> x(m.width());
        for (auto& v : x) v = u(rng) * 4.0 - 2.0;
        const auto y = m.forward(x);
        for (const auto& g : m.registry().groups()) {
            double s = 0.0;
            for (std::size_t i = g.start; i < g.end; ++i) s += y[i];
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Autoencoder, ZeroWeightsGiveUniformGroups) {
    AutoencoderModel m(registry_of({2, 3}), std::vector<std::size_t>{}, 1);
    for (auto& l : m.mutable_layers()) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    const auto y = m.forward(std::vector<double>{1, 0, 0, 1, 0});
    EXPECT_DOUBLE_EQ(y[0], 0.5);
    EXPECT_DOUBLE_EQ(y[1], 0.5);
    for (int i = 2; i < 5; ++i) EXPECT_DOUBLE_EQ(y[i], 1.0 / 3.0);
}

TEST(Autoencoder, HandComputedSingleHiddenUnit) {
    DenseLayer enc(2, 1, Activation::tanh);
    enc.weights = {0.5, -0.3};
    enc.bias = {0.1};
    DenseLayer dec(1, 2, Activation::group_softmax);
    dec.weights = {0.8, -0.4};
    dec.bias = {0.0, 0.2};
    const AutoencoderModel m(registry_of({2}), std::vector<DenseLayer>{enc, dec});

    const double h = std::tanh(0.5 * 1.0 - 0.3 * 0.0 + 0.1);
    const double z0 = 0.8 * h, z1 = -0.4 * h + 0.2;
    const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
    const auto y = m.forward(std::vector<double>{1.0, 0.0});
    EXPECT_NEAR(y[0], p0, 1e-15);
    EXPECT_NEAR(y[1], 1.0 - p0, 1e-15);
}

TEST(Autoencoder, ForwardRejectsWrongWidth) {
    const AutoencoderModel m(registry_of({2, 2}), std::vector<std::size_t>{}, 1);
    EXPECT_THROW(m.forward(std::vector<double>{1, 0}), InputError);
}

TEST(Gradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> shapes{
        {{2, 2}, {2}}, {{2, 3}, {2}}, {{3, 3}, {3}}, {{2, 2}, {2, 1}}, {{4}, {2}}};
    for (int trial = 0; trial < 25; ++trial) {
        const auto& [sizes, hidden] = shapes[static_cast<std::size_t>(trial) % shapes.size()];
        const AutoencoderModel m(registry_of(sizes), hidden, rng());
        ASSERT_LE(m.parameter_count(), 50u);
        std::vector<double> x(m.width()), t(m.width(), 0.0);
        for (auto& v : x) v = u(rng);
        for (const auto& g : m.registry().groups())
            t[g.start + std::uniform_int_distribution<std::size_t>(0, g.size() - 1)(rng)] = 1.0;

        auto grads = m.zero_gradients();
        m.accumulate_gradients(x, t, grads);
        const auto analytic = flatten(grads);
        const auto numeric = numeric_gradient(m, x, t, 1e-4);
        ASSERT_EQ(analytic.size(), numeric.size());
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-7});
            EXPECT_LE(std::abs(analytic[i] - numeric[i]) / scale, 1e-3) << "trial " << trial << " param " << i;
        }
    }
}

TEST(Gradient, ScaleMultipliesContribution) {
    const AutoencoderModel m(registry_of({2, 2}), std::vector<std::size_t>{}, 3);
    const std::vector<double> x{0.2, 0.7, 0.9, 0.1}, t{0, 1, 1, 0};
    auto g1 = m.zero_gradients(), g2 = m.zero_gradients();
    m.accumulate_gradients(x, t, g1, 1.0);
    m.accumulate_gradients(x, t, g2, 0.25);
    const auto a = flatten(g1), b = flatten(g2);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 0.25 * a[i], 1e-15);
}

TEST(Gradient, VanishesAtStationaryPoint) {
    // one group of two classes, all parameters zero: the output is [0.5, 0.5]
    // which is the exact minimiser for target [0.5, 0.5]
    AutoencoderModel m(registry_of({2}), std::vector<std::size_t>{1}, 1);
    for (auto& l : m.mutable_layers()) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    auto g = m.zero_gradients();
    m.accumulate_gradients(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}, g);
    for (double v : flatten(g)) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, WeightDecayIsDecayTimesWeight) {
    const AutoencoderModel m(registry_of({2, 2}), std::vector<std::size_t>{}, 5);
    auto g = m.zero_gradients();
    add_weight_decay(m, g, 0.01);
    std::vector<double> w;
    for (const auto& l : m.layers()) {
        w.insert(w.end(), l.weights.begin(), l.weights.end());
        w.insert(w.end(), l.bias.begin(), l.bias.end());
    }
    const auto flat = flatten(g);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(flat[i], 0.01 * w[i]);
}

TEST(Train, MemorisesSingleRepeatedTransaction) {
    const auto d = testing::transactions_of({2, 3, 2}, std::vector<std::vector<std::uint32_t>>(2000, {1, 2, 0}));
    TrainConfig c;
    c.noise_factor = 0.0;
    c.seed = 7;
    const auto r = train(d, c);
    ASSERT_EQ(r.loss_trace.size(), 20u);
    EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
    EXPECT_LT(r.loss_trace.back(), 0.05);
}

TEST(Train, FixedSeedIsBitIdentical) {
    std::mt19937_64 rng(4);
    const auto d = testing::random_transactions({2, 3, 3}, 300, rng);
    TrainConfig c;
    c.epochs = 5;
    const auto a = train(d, c), b = train(d, c);
    EXPECT_EQ(a.loss_trace, b.loss_trace);
    EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
}

TEST(Train, ZeroLearningRateLeavesWeights) {
    std::mt19937_64 rng(4);
    const auto d = testing::random_transactions({2, 3, 3}, 200, rng);
    TrainConfig c;
    c.epochs = 4;
    c.learning_rate = 0.0;
    c.weight_decay = 0.0;
    const auto r = train(d, c);
    const AutoencoderModel fresh(d.registry(), c.hidden_dims, c.seed);
    for (std::size_t l = 0; l < fresh.layers().size(); ++l) {
        EXPECT_EQ(r.model.layers()[l].weights, fresh.layers()[l].weights);
        EXPECT_EQ(r.model.layers()[l].bias, fresh.layers()[l].bias);
    }
    c.noise_factor = 0.0;
    const auto flat = train(d, c);
    for (double v : flat.loss_trace) EXPECT_NEAR(v, flat.loss_trace.front(), 1e-12);
}

TEST(Train, RejectsBadConfig) {
    std::mt19937_64 rng(4);
    const auto d = testing::random_transactions({2, 2}, 10, rng);
    TrainConfig c;
    c.epochs = 0;
    EXPECT_THROW(train(d, c), InputError);
    EXPECT_THROW(train(TransactionSet{}, TrainConfig{}), InputError);
}

TEST(ModelJson, RoundTripPreservesOutputs) {
    std::mt19937_64 rng(4);
    const auto d = testing::random_transactions({2, 3, 3}, 100, rng);
    TrainConfig c;
    c.epochs = 2;
    const auto m = train(d, c).model;
    const auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()), d.registry().hash());
    EXPECT_EQ(back.train_config().epochs, 2);
    for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(back.forward(d.row(r)), m.forward(d.row(r)));
}

TEST(ModelJson, RejectsRegistryMismatch) {
    const AutoencoderModel m(registry_of({2, 3}), std::vector<std::size_t>{}, 1);
    EXPECT_THROW(model_from_json(to_json(m), registry_of({3, 2}).hash()), InputError);
    auto j = to_json(m);
    j["registry_hash"] = "0000000000000000";
    EXPECT_THROW(model_from_json(j), InputError);
    j = to_json(m);
    j["version"] = 99;
    EXPECT_THROW(model_from_json(j), InputError);
}

}  // namespace
}  // namespace semrl
