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

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semrl/error.hpp"
#include "semrl/ingestion.hpp"
#include "semrl/neural_core.hpp"
#include "semrl/rule_extraction.hpp"
#include "semrl/rule_model.hpp"
#include "semrl/semantic_model.hpp"
#include "semrl/synth.hpp"
#include "semrl/transactions.hpp"

namespace semrl {

/// Monotonic wall-clock stopwatch.
class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

struct PrepareConfig {
    int bins = 5;
    int neighbor_depth = 1;
    int graph_bins = 5;
    SourceSettingsMap settings;
};

/// Everything between raw inputs and the one-hot matrix.
struct PreparedData {
    std::map<std::string, BinScheme> schemes;
    CategoricalTable table;
    TransactionSet transactions;
};

inline PreparedData prepare(const TimeSeriesDataset& dataset, const PropertyGraph& graph, const Binding& binding,
                            const PrepareConfig& config) {
    if (config.bins < 1) throw InputError("bins must be >= 1");
    PreparedData out;
    out.schemes = fit_source_schemes(dataset, config.bins, config.settings);
    const auto discrete = discretize(dataset, out.schemes);
    out.table = enrich(discrete, graph, binding, config.neighbor_depth, config.graph_bins);
    out.transactions = encode_one_hot(out.table);
    return out;
}

/// Synthetic data carries its own per-source settings (kinds, bin counts);
/// explicit settings in `config` take precedence.
inline PreparedData prepare(const SynthData& data, PrepareConfig config) {
    for (const auto& [s, cfg] : data.settings) config.settings.emplace(s, cfg);
    return prepare(data.dataset, data.graph, data.binding, config);
}

/// The rule of `planted` expressed over the registry of `prepared`, or
/// nullopt when one of its features did not survive preparation.
inline std::optional<Rule> resolve_planted(const PlantedRule& planted, const PreparedData& prepared) {
    const auto& reg = prepared.transactions.registry();
    auto ref = [&](const SourceClass& sc) -> std::optional<ItemRef> {
        auto scheme = prepared.schemes.find(sc.source);
        if (scheme == prepared.schemes.end() || sc.bin >= scheme->second.bin_count()) return std::nullopt;
        auto g = reg.find_group(FeatureDescriptor::measurement(sc.source));
        if (!g) return std::nullopt;
        auto c = reg.find_class(*g, scheme->second.label(sc.bin));
        if (!c) return std::nullopt;
        return ItemRef{static_cast<std::uint32_t>(*g), static_cast<std::uint32_t>(*c)};
    };
    std::vector<ItemRef> ants;
    for (const auto& a : planted.antecedents) {
        auto r = ref(a);
        if (!r) return std::nullopt;
        ants.push_back(*r);
    }
    auto cons = ref(planted.consequent);
    if (!cons) return std::nullopt;
    return make_rule(std::move(ants), *cons);
}

inline bool contains_rule(const std::vector<Rule>& rules, const Rule& r) {
    const auto key = r.key();
    for (const auto& x : rules)
        if (x.key() == key) return true;
    return false;
}

struct AeRun {
    AutoencoderModel model;
    std::vector<double> loss_trace;
    std::vector<Rule> rules;
    std::size_t dropped = 0;
    std::size_t vectors_evaluated = 0;
    double train_seconds = 0.0;
    double extract_seconds = 0.0;
};

/// Trains the autoencoder, extracts rules and attaches their metrics.
inline AeRun run_autoencoder(const TransactionSet& transactions, const TrainConfig& train_config,
                             const ExtractionConfig& extraction) {
    Stopwatch tw;
    auto trained = train(transactions, train_config);
    AeRun run{std::move(trained.model), std::move(trained.loss_trace), {}, 0, 0, tw.seconds(), 0.0};
    Stopwatch ew;
    auto extracted = extract_rules(run.model, transactions, extraction);
    run.extract_seconds = ew.seconds();
    auto annotated = attach_metrics(std::move(extracted.rules), transactions);
    run.rules = std::move(annotated.rules);
    run.dropped = annotated.dropped;
    run.vectors_evaluated = extracted.vectors_evaluated;
    return run;
}

}  // namespace semrl
