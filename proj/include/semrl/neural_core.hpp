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
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "semrl/error.hpp"
#include "semrl/transactions.hpp"

namespace semrl {

enum class Activation { tanh, group_softmax };

inline const char* to_string(Activation a) { return a == Activation::tanh ? "tanh" : "group_softmax"; }

/// Fully connected layer; weights are row-major (out x in).
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::tanh;

    DenseLayer() = default;
    DenseLayer(std::size_t in_, std::size_t out_, Activation act)
        : in(in_), out(out_), weights(in_ * out_, 0.0), bias(out_, 0.0), activation(act) {}

    double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
    double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

struct TrainConfig {
    double learning_rate = 5e-3;
    int epochs = 20;
    double weight_decay = 2e-8;
    double noise_factor = 0.5;
    int batch_size = 64;
    std::uint64_t seed = 42;
    /// Encoder widths; the decoder mirrors them. Empty selects the default
    /// ceil(w/2), ceil(w/4) shape.
    std::vector<std::size_t> hidden_dims;

    void check() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw InputError("learning_rate must be finite and >= 0");
        if (epochs < 1) throw InputError("epochs must be >= 1");
        if (!(weight_decay >= 0.0)) throw InputError("weight_decay must be >= 0");
        if (!(noise_factor >= 0.0)) throw InputError("noise_factor must be >= 0");
        if (batch_size < 1) throw InputError("batch_size must be >= 1");
    }
};

inline constexpr double kProbabilityEpsilon = 1e-7;

/// Default encoder widths for an input of `width` neurons: ceil(w/2) and
/// ceil(w/4), at least 2 each but always strictly below the input width.
inline std::vector<std::size_t> default_hidden_dims(std::size_t width) {
    if (width < 2) throw InputError("autoencoder input must have at least 2 neurons");
    auto fit = [width](std::size_t h) { return std::min(std::max<std::size_t>(h, 2), width - 1); };
    return {fit((width + 1) / 2), fit((width + 3) / 4)};
}

/// Mean binary cross-entropy over components, probabilities clamped to
/// [eps, 1 - eps].
inline double bce_loss(std::span<const double> output, std::span<const double> target) {
    if (output.size() != target.size() || output.empty()) throw InputError("loss: width mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double p = std::clamp(output[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
        sum += -(target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p));
    }
    return sum / static_cast<double>(output.size());
}

struct LayerGradient {
    std::vector<double> weights;
    std::vector<double> bias;
};

using Gradients = std::vector<LayerGradient>;

/// Under-complete dense autoencoder: tanh hidden layers and a softmax
/// applied separately to each feature group of the registry.
class AutoencoderModel {
public:
    AutoencoderModel() = default;

    /// Randomly initialised model, weights uniform in +-1/sqrt(fan_in).
    AutoencoderModel(FeatureRegistry registry, std::vector<std::size_t> hidden_dims, std::uint64_t seed)
        : registry_(std::move(registry)), seed_(seed) {
        if (hidden_dims.empty()) hidden_dims = default_hidden_dims(registry_.width());
        std::vector<std::size_t> widths{registry_.width()};
        widths.insert(widths.end(), hidden_dims.begin(), hidden_dims.end());
        widths.insert(widths.end(), hidden_dims.rbegin() + 1, hidden_dims.rend());
        widths.push_back(registry_.width());
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const bool last = l + 2 == widths.size();
            DenseLayer layer(widths[l], widths[l + 1], last ? Activation::group_softmax : Activation::tanh);
            const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
            std::uniform_real_distribution<double> init(-bound, bound);
            for (auto& w : layer.weights) w = init(rng);
            for (auto& b : layer.bias) b = init(rng);
            layers_.push_back(std::move(layer));
        }
        check();
    }

    /// Model with explicit layers (hand-built or loaded).
    AutoencoderModel(FeatureRegistry registry, std::vector<DenseLayer> layers, std::uint64_t seed = 0)
        : registry_(std::move(registry)), layers_(std::move(layers)), seed_(seed) {
        check();
    }

    const FeatureRegistry& registry() const { return registry_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& mutable_layers() { return layers_; }
    std::size_t width() const { return registry_.width(); }
    std::uint64_t seed() const { return seed_; }
    const TrainConfig& train_config() const { return config_; }
    void set_train_config(TrainConfig c) { config_ = std::move(c); }

    std::vector<std::size_t> hidden_dims() const {
        std::vector<std::size_t> out;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) out.push_back(layers_[l].out);
        out.resize((out.size() + 1) / 2);
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
        return n;
    }

    std::vector<double> forward(std::span<const double> input) const {
        auto acts = forward_trace(input);
        return std::move(acts.back());
    }

    /// Activations of every layer, input first.
    std::vector<std::vector<double>> forward_trace(std::span<const double> input) const {
        if (input.size() != width())
            throw InputError("forward: input width " + std::to_string(input.size()) + " != model width " +
                             std::to_string(width()));
        std::vector<std::vector<double>> acts;
        acts.reserve(layers_.size() + 1);
        acts.emplace_back(input.begin(), input.end());
        for (const auto& layer : layers_) {
            const auto& x = acts.back();
            std::vector<double> z(layer.bias);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.weights.data() + o * layer.in;
                double s = 0.0;
                for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * x[i];
                z[o] += s;
            }
            if (layer.activation == Activation::tanh)
                for (auto& v : z) v = std::tanh(v);
            else
                group_softmax(z);
            acts.push_back(std::move(z));
        }
        return acts;
    }

    /// Gradient of bce_loss(forward(input), target) for a single sample,
    /// added into `grads` scaled by `scale`. Returns the sample loss.
    double accumulate_gradients(std::span<const double> input, std::span<const double> target, Gradients& grads,
                                double scale = 1.0) const {
        if (target.size() != width()) throw InputError("backward: target width mismatch");
        const auto acts = forward_trace(input);
        const auto& p = acts.back();
        const double n = static_cast<double>(p.size());

        // dL/dp with the clamp's zero derivative outside [eps, 1 - eps]
        std::vector<double> g(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] < kProbabilityEpsilon || p[i] > 1.0 - kProbabilityEpsilon) {
                g[i] = 0.0;
                continue;
            }
            g[i] = (-target[i] / p[i] + (1.0 - target[i]) / (1.0 - p[i])) / n;
        }
        std::vector<double> delta(p.size());
        for (const auto& grp : registry_.groups()) {
            double dot = 0.0;
            for (std::size_t i = grp.start; i < grp.end; ++i) dot += g[i] * p[i];
            for (std::size_t j = grp.start; j < grp.end; ++j) delta[j] = p[j] * (g[j] - dot);
        }

        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& layer = layers_[l];
            const auto& x = acts[l];
            auto& lg = grads[l];
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o] * scale;
                lg.bias[o] += d;
                double* gw = lg.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * x[i];
            }
            if (l == 0) break;
            std::vector<double> prev(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) prev[i] += w[i] * delta[o];
            }
            for (std::size_t i = 0; i < layer.in; ++i) prev[i] *= 1.0 - x[i] * x[i];
            delta = std::move(prev);
        }
        return bce_loss(p, target);
    }

    Gradients zero_gradients() const {
        Gradients g;
        for (const auto& l : layers_)
            g.push_back({std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
        return g;
    }

private:
    void group_softmax(std::vector<double>& z) const {
        for (const auto& grp : registry_.groups()) {
            double mx = -HUGE_VAL;
            for (std::size_t i = grp.start; i < grp.end; ++i) mx = std::max(mx, z[i]);
            double sum = 0.0;
            for (std::size_t i = grp.start; i < grp.end; ++i) sum += (z[i] = std::exp(z[i] - mx));
            for (std::size_t i = grp.start; i < grp.end; ++i) z[i] /= sum;
        }
    }

    void check() const {
        const std::size_t w = registry_.width();
        if (w < 2) throw InputError("autoencoder: registry must have at least 2 neurons");
        if (layers_.size() < 2) throw InputError("autoencoder: needs at least one hidden layer");
        std::size_t expect_in = w;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            const bool last = l + 1 == layers_.size();
            if (layer.in != expect_in) throw InputError("autoencoder: layer " + std::to_string(l) + " input width mismatch");
            if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out)
                throw InputError("autoencoder: layer " + std::to_string(l) + " parameter shape mismatch");
            if (!last && layer.out >= w)
                throw InputError("autoencoder: hidden width " + std::to_string(layer.out) +
                                 " is not smaller than input width " + std::to_string(w));
            if (last != (layer.activation == Activation::group_softmax))
                throw InputError("autoencoder: only the output layer uses group softmax");
            expect_in = layer.out;
        }
        if (expect_in != w) throw InputError("autoencoder: output width must equal input width");
    }

    FeatureRegistry registry_;
    std::vector<DenseLayer> layers_;
    std::uint64_t seed_ = 0;
    TrainConfig config_;
};

/// Coupled L2 decay: adds decay * w to every weight and bias gradient.
inline void add_weight_decay(const AutoencoderModel& model, Gradients& grads, double decay) {
    if (decay == 0.0) return;
    const auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) grads[l].weights[i] += decay * layers[l].weights[i];
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) grads[l].bias[i] += decay * layers[l].bias[i];
    }
}

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class AdamOptimizer {
public:
    AdamOptimizer(const AutoencoderModel& model, double learning_rate) : lr_(learning_rate) {
        m_ = model.zero_gradients();
        v_ = model.zero_gradients();
    }

    void step(AutoencoderModel& model, const Gradients& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m,
                          std::vector<double>& v) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
                param[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
            }
        };
        auto& layers = model.mutable_layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            update(layers[l].weights, grads[l].weights, m_[l].weights, v_[l].weights);
            update(layers[l].bias, grads[l].bias, m_[l].bias, v_[l].bias);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    double lr_;
    std::size_t t_ = 0;
    Gradients m_;
    Gradients v_;
};

struct TrainResult {
    AutoencoderModel model;
    /// Mean per-sample loss (corrupted input vs clean target) of each epoch.
    std::vector<double> loss_trace;
};

/// Denoising training: each minibatch is corrupted, reconstructed, scored
/// against the clean rows and followed by one Adam step.
inline TrainResult train(const TransactionSet& data, const TrainConfig& config) {
    config.check();
    if (data.empty()) throw InputError("train: no transactions");
    AutoencoderModel model(data.registry(), config.hidden_dims, config.seed);
    model.set_train_config(config);
    AdamOptimizer adam(model, config.learning_rate);

    // shuffling and corruption draw from a stream separate from weight init
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 1u};
    std::mt19937_64 rng(seq);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(config.batch_size);

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            auto grads = model.zero_gradients();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const auto clean = data.row(order[k]);
                const auto noisy = corrupt(clean, config.noise_factor, rng);
                batch_loss += model.accumulate_gradients(noisy, clean, grads, scale);
            }
            if (!std::isfinite(batch_loss))
                throw TrainingError(static_cast<std::size_t>(epoch), batch_index, batch_loss);
            add_weight_decay(model, grads, config.weight_decay);
            adam.step(model, grads);
            epoch_loss += batch_loss;
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    result.model = std::move(model);
    return result;
}

// --- persistence -------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const AutoencoderModel& m) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.layers())
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"activation", to_string(l.activation)},
                          {"weights", l.weights},
                          {"bias", l.bias}});
    const auto& c = m.train_config();
    return {{"format", "semrl-autoencoder"},
            {"version", kModelFormatVersion},
            {"registry_hash", m.registry().hash()},
            {"registry", to_json(m.registry())},
            {"hidden_dims", m.hidden_dims()},
            {"seed", m.seed()},
            {"hyperparameters",
             {{"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"weight_decay", c.weight_decay},
              {"noise_factor", c.noise_factor},
              {"batch_size", c.batch_size},
              {"seed", c.seed}}},
            {"layers", layers}};
}

/// Rebuilds a model; refuses files whose registry hash does not match the
/// stored registry or `expected_hash` when given.
inline AutoencoderModel model_from_json(const nlohmann::json& j, const std::string& expected_hash = {}) {
    try {
        if (j.at("format").get<std::string>() != "semrl-autoencoder")
            throw InputError("model: not a semrl autoencoder file");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw InputError("model: unsupported format version " + std::to_string(j.at("version").get<int>()));
        auto registry = registry_from_json(j.at("registry"));
        const auto stored = j.at("registry_hash").get<std::string>();
        if (stored != registry.hash()) throw InputError("model: registry hash does not match stored registry");
        if (!expected_hash.empty() && stored != expected_hash)
            throw InputError("model: registry hash " + stored + " does not match transactions (" + expected_hash + ")");
        std::vector<DenseLayer> layers;
        for (const auto& lj : j.at("layers")) {
            DenseLayer l;
            l.in = lj.at("in").get<std::size_t>();
            l.out = lj.at("out").get<std::size_t>();
            const auto act = lj.at("activation").get<std::string>();
            if (act == "tanh")
                l.activation = Activation::tanh;
            else if (act == "group_softmax")
                l.activation = Activation::group_softmax;
            else
                throw InputError("model: unknown activation '" + act + "'");
            l.weights = lj.at("weights").get<std::vector<double>>();
            l.bias = lj.at("bias").get<std::vector<double>>();
            layers.push_back(std::move(l));
        }
        AutoencoderModel model(std::move(registry), std::move(layers), j.at("seed").get<std::uint64_t>());
        const auto& h = j.at("hyperparameters");
        TrainConfig c;
        c.learning_rate = h.at("learning_rate").get<double>();
        c.epochs = h.at("epochs").get<int>();
        c.weight_decay = h.at("weight_decay").get<double>();
        c.noise_factor = h.at("noise_factor").get<double>();
        c.batch_size = h.at("batch_size").get<int>();
        c.seed = h.at("seed").get<std::uint64_t>();
        c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
        model.set_train_config(std::move(c));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    }
}

}  // namespace semrl
