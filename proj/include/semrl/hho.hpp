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
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "semrl/error.hpp"
#include "semrl/rule_model.hpp"
#include "semrl/transactions.hpp"

namespace semrl {

struct HhoConfig {
    std::size_t population = 50;
    std::size_t max_iterations = 100;
    std::uint64_t seed = 1;
    /// Discovered rules below this confidence are not kept.
    double min_fitness = 0.0;
    unsigned threads = 1;
    Deadline deadline;
};

struct HhoResult {
    std::vector<Rule> rules;
    /// Fitness the search assigned to each rule, aligned with `rules`.
    std::vector<double> fitness;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double best_fitness = 0.0;
    /// Lowest confidence among kept rules (1 when none were kept).
    double min_fitness_kept = 1.0;
};

/// Real-vector rule encoding: three genes per feature group, all in [0, 1].
///   gene 0: role, < 0.5 antecedent, >= 0.5 consequent
///   gene 1: class selector, floor(gene * classes)
///   gene 2: inclusion strength, group used when >= 0.5
/// Of several consequent-role groups the strongest one wins (lowest index on
/// ties); the others are left out.
class RuleEncoding {
public:
    static constexpr std::size_t kGenesPerGroup = 3;

    explicit RuleEncoding(const FeatureRegistry& registry) : registry_(&registry) {}

    std::size_t dimension() const { return registry_->group_count() * kGenesPerGroup; }

    std::optional<Rule> decode(std::span<const double> x) const {
        std::vector<ItemRef> ants;
        std::optional<ItemRef> cons;
        double cons_strength = -1.0;
        for (std::uint32_t g = 0; g < registry_->group_count(); ++g) {
            const double role = x[g * kGenesPerGroup];
            const double sel = x[g * kGenesPerGroup + 1];
            const double strength = x[g * kGenesPerGroup + 2];
            if (strength < 0.5) continue;
            const auto size = registry_->group(g).size();
            const auto cls = static_cast<std::uint32_t>(std::min<double>(std::floor(sel * static_cast<double>(size)),
                                                                         static_cast<double>(size - 1)));
            if (role < 0.5) {
                ants.push_back({g, cls});
            } else if (strength > cons_strength) {
                cons = ItemRef{g, cls};
                cons_strength = strength;
            }
        }
        if (ants.empty() || !cons) return std::nullopt;
        return make_rule(std::move(ants), *cons);
    }

private:
    const FeatureRegistry* registry_;
};

namespace detail {

/// Mantegna step for a Levy flight with exponent 1.5.
template <class Rng>
double levy_step(Rng& rng) {
    constexpr double beta = 1.5;
    static const double sigma =
        std::pow(std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0) /
                     (std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0)),
                 1.0 / beta);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double u = gauss(rng) * sigma;
    const double v = gauss(rng);
    return 0.01 * u / std::pow(std::abs(v), 1.0 / beta);
}

}  // namespace detail

/// Harris Hawks Optimization over rule encodings, maximising confidence.
/// Every distinct valid rule decoded during the run is archived; the
/// archive (filtered by `min_fitness`) is returned with full metrics.
inline HhoResult hho_mine(const TransactionSet& data, const HhoConfig& config) {
    if (config.population < 2) throw InputError("hho: population must be >= 2");
    if (config.max_iterations < 1) throw InputError("hho: max_iterations must be >= 1");
    if (data.empty()) throw InputError("hho: empty dataset");

    const RuleEncoding encoding(data.registry());
    const std::size_t dim = encoding.dimension();
    const std::size_t pop = config.population;
    const auto horizon = static_cast<double>(config.max_iterations);

    std::vector<std::mt19937_64> rngs;
    for (std::size_t h = 0; h < pop; ++h) {
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(h), 0x4848u};
        rngs.emplace_back(seq);
    }

    std::mutex cache_mutex;
    std::map<std::pair<std::vector<ItemRef>, ItemRef>, double> cache;
    std::vector<std::size_t> evaluations(pop, 0);
    std::vector<std::vector<Rule>> discovered(pop);

    auto fitness = [&](std::size_t hawk, std::span<const double> x) -> double {
        ++evaluations[hawk];
        auto rule = encoding.decode(x);
        if (!rule) return 0.0;
        const auto key = rule->key();
        {
            std::lock_guard lock(cache_mutex);
            if (auto it = cache.find(key); it != cache.end()) return it->second;
        }
        auto conf = confidence(*rule, data);
        const double f = conf.value_or(0.0);
        bool fresh = false;
        {
            std::lock_guard lock(cache_mutex);
            fresh = cache.emplace(key, f).second;
        }
        if (fresh && conf && f >= config.min_fitness) discovered[hawk].push_back(std::move(*rule));
        return f;
    };

    std::vector<std::vector<double>> hawks(pop, std::vector<double>(dim));
    for (std::size_t h = 0; h < pop; ++h) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : hawks[h]) v = u(rngs[h]);
    }
    std::vector<double> fit(pop, 0.0);
    std::vector<double> rabbit(dim, 0.0);
    double rabbit_fit = -1.0;

    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(config.threads, pop));
    auto parallel = [&](auto&& body) {
        if (workers == 1) {
            for (std::size_t h = 0; h < pop; ++h) body(h);
            return;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t h = pop * w / workers; h < pop * (w + 1) / workers; ++h) body(h);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    };
    // out-of-range components are redrawn uniformly rather than pinned to
    // the bound, which would freeze genes at 0 or 1
    auto clip = [](std::vector<double>& x, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : x)
            if (!(v >= 0.0 && v <= 1.0)) v = u(rng);
    };

    HhoResult result;
    for (std::size_t t = 0; t < config.max_iterations; ++t) {
        config.deadline.check("hho");
        parallel([&](std::size_t h) { fit[h] = fitness(h, hawks[h]); });
        for (std::size_t h = 0; h < pop; ++h)
            if (fit[h] > rabbit_fit) {
                rabbit_fit = fit[h];
                rabbit = hawks[h];
            }

        std::vector<double> mean(dim, 0.0);
        for (const auto& x : hawks)
            for (std::size_t d = 0; d < dim; ++d) mean[d] += x[d] / static_cast<double>(pop);
        const auto snapshot = hawks;
        const double decay = 1.0 - static_cast<double>(t) / horizon;

        parallel([&](std::size_t h) {
            auto& rng = rngs[h];
            std::uniform_real_distribution<double> u(0.0, 1.0);
            auto& x = hawks[h];
            const double escaping = 2.0 * (2.0 * u(rng) - 1.0) * decay;
            const double e = std::abs(escaping);

            if (e >= 1.0) {
                // exploration: perch on a random hawk or relative to the group mean
                const double q = u(rng);
                if (q >= 0.5) {
                    const auto& other = snapshot[std::uniform_int_distribution<std::size_t>(0, pop - 1)(rng)];
                    const double r1 = u(rng), r2 = u(rng);
                    for (std::size_t d = 0; d < dim; ++d) x[d] = other[d] - r1 * std::abs(other[d] - 2.0 * r2 * x[d]);
                } else {
                    const double r3 = u(rng), r4 = u(rng);
                    for (std::size_t d = 0; d < dim; ++d) x[d] = (rabbit[d] - mean[d]) - r3 * r4;
                }
                clip(x, rng);
                return;
            }

            const double r = u(rng);
            const double jump = 2.0 * (1.0 - u(rng));
            if (r >= 0.5 && e >= 0.5) {  // soft besiege
                for (std::size_t d = 0; d < dim; ++d)
                    x[d] = (rabbit[d] - x[d]) - escaping * std::abs(jump * rabbit[d] - x[d]);
            } else if (r >= 0.5) {  // hard besiege
                for (std::size_t d = 0; d < dim; ++d) x[d] = rabbit[d] - escaping * std::abs(rabbit[d] - x[d]);
            } else {  // besiege with progressive rapid dives
                const auto& anchor = e >= 0.5 ? x : mean;
                std::vector<double> y(dim), z(dim);
                for (std::size_t d = 0; d < dim; ++d) y[d] = rabbit[d] - escaping * std::abs(jump * rabbit[d] - anchor[d]);
                clip(y, rng);
                const double fy = fitness(h, y);
                if (fy > fit[h]) {
                    x = std::move(y);
                } else {
                    for (std::size_t d = 0; d < dim; ++d) z[d] = y[d] + u(rng) * detail::levy_step(rng);
                    clip(z, rng);
                    if (fitness(h, z) > fit[h]) x = std::move(z);
                }
            }
            clip(x, rng);
        });
        result.iterations = t + 1;
    }
    parallel([&](std::size_t h) { fit[h] = fitness(h, hawks[h]); });
    for (std::size_t h = 0; h < pop; ++h) rabbit_fit = std::max(rabbit_fit, fit[h]);

    std::map<std::pair<std::vector<ItemRef>, ItemRef>, Rule> archive;
    for (auto& found : discovered)
        for (auto& r : found) archive.emplace(r.key(), std::move(r));
    for (auto& [_, r] : archive) {
        r.metrics = evaluate(r, data);
        result.min_fitness_kept = std::min(result.min_fitness_kept, *r.metrics->confidence);
        result.fitness.push_back(cache.at(r.key()));
        result.rules.push_back(std::move(r));
    }
    for (auto n : evaluations) result.evaluations += n;
    result.best_fitness = std::max(rabbit_fit, 0.0);
    return result;
}

}  // namespace semrl
