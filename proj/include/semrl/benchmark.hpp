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
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "semrl/error.hpp"
#include "semrl/format.hpp"
#include "semrl/fp_growth.hpp"
#include "semrl/hho.hpp"
#include "semrl/pipeline.hpp"
#include "semrl/synth.hpp"

namespace semrl {

inline constexpr const char* kReportNote =
    "Synthetic planted-rule data. Compare shapes and orderings (trends, overlap, ratios) only; "
    "absolute times and metric values are not comparable to any published figures.";

struct BenchConfig {
    SynthSpec synth;
    PrepareConfig prepare;
    TrainConfig train;
    ExtractionConfig extraction;
    double fp_min_support = 0.2;
    double fp_min_confidence = 0.8;
    HhoConfig hho;
    /// Any of "ae", "fp_growth", "hho".
    std::vector<std::string> algorithms{"ae", "fp_growth", "hho"};
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::size_t> source_counts;
    std::size_t repetitions = 10;
    std::vector<int> antecedent_sweep{1, 2, 3};
    std::vector<double> support_sweep{0.4, 0.3, 0.2};
    std::vector<double> thresholds{0.9, 0.8, 0.7, 0.6, 0.5};
    /// Per mining call; 0 disables. Runs past it are recorded as censored.
    double timeout_secs = 0.0;
    /// Runs seeds concurrently; timings are then flagged as not comparable.
    bool parallel_seeds = false;

    bool uses(const std::string& algorithm) const {
        return std::find(algorithms.begin(), algorithms.end(), algorithm) != algorithms.end();
    }
    void check() const {
        if (algorithms.empty()) throw InputError("bench: no algorithms selected");
        for (const auto& a : algorithms)
            if (a != "ae" && a != "fp_growth" && a != "hho")
                throw InputError("bench: unknown algorithm '" + a + "' (expected ae|fp_growth|hho)");
        if (seeds.empty()) throw InputError("bench: no seeds");
        if (repetitions == 0) throw InputError("bench: repetitions must be >= 1");
        for (double t : thresholds)
            if (!(t > 0.0 && t < 1.0)) throw InputError("bench: thresholds must lie in (0, 1)");
        detail::check_thresholds(fp_min_support, fp_min_confidence);
        train.check();
    }
};

inline nlohmann::json to_json(const SynthSpec& s) {
    nlohmann::json planted = nlohmann::json::array();
    for (const auto& p : s.planted) {
        nlohmann::json ants = nlohmann::json::array();
        for (const auto& a : p.antecedents) ants.push_back({{"source", a.source}, {"bin", a.bin}});
        planted.push_back({{"antecedents", ants},
                           {"consequent", {{"source", p.consequent.source}, {"bin", p.consequent.bin}}},
                           {"confidence", p.confidence},
                           {"support", p.support}});
    }
    const char* graph = s.graph == GraphTemplate::chain ? "chain" : s.graph == GraphTemplate::star ? "star" : "grid";
    return {{"sources", s.sources},
            {"categorical_sources", s.categorical_sources},
            {"categorical_skew", s.categorical_skew},
            {"categorical_classes", s.categorical_classes},
            {"graph", graph},
            {"nodes", s.nodes},
            {"planted", planted},
            {"transactions", s.transactions},
            {"noise_rate", s.noise_rate},
            {"bins", s.bins},
            {"seed", s.seed}};
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},         {"weight_decay", c.weight_decay},
            {"noise_factor", c.noise_factor},   {"batch_size", c.batch_size}, {"seed", c.seed},
            {"hidden_dims", c.hidden_dims}};
}

inline nlohmann::json to_json(const BenchConfig& c) {
    return {{"synth", to_json(c.synth)},
            {"prepare", {{"bins", c.prepare.bins}, {"neighbor_depth", c.prepare.neighbor_depth},
                         {"graph_bins", c.prepare.graph_bins}}},
            {"train", to_json(c.train)},
            {"extraction", {{"similarity_threshold", c.extraction.similarity_threshold},
                            {"max_antecedents", c.extraction.max_antecedents},
                            {"threads", c.extraction.threads}}},
            {"fp_growth", {{"min_support", c.fp_min_support}, {"min_confidence", c.fp_min_confidence}}},
            {"hho", {{"population", c.hho.population}, {"max_iterations", c.hho.max_iterations},
                     {"min_fitness", c.hho.min_fitness}, {"threads", c.hho.threads}}},
            {"algorithms", c.algorithms},
            {"seeds", c.seeds},
            {"source_counts", c.source_counts},
            {"repetitions", c.repetitions},
            {"antecedent_sweep", c.antecedent_sweep},
            {"support_sweep", c.support_sweep},
            {"thresholds", c.thresholds},
            {"timeout_secs", c.timeout_secs},
            {"parallel_seeds", c.parallel_seeds}};
}

inline std::string config_hash(const nlohmann::json& config) { return to_hex(fnv1a(config.dump())); }

/// One line of a report: an algorithm at one parameter setting, either for
/// a single seed or aggregated (seed empty).
struct ExperimentRow {
    std::string experiment;
    std::string algorithm;
    std::string parameter;
    double value = 0.0;
    std::optional<std::uint64_t> seed;
    std::size_t runs = 0;      // completed runs
    std::size_t censored = 0;  // runs that hit the timeout
    double rules = 0.0;        // mean rule count
    std::size_t excluded = 0;  // rules left out of the averages (undefined metric)
    std::optional<double> support, confidence, lift, leverage, zhangs;
    std::optional<double> overlap;  // vs the fp_growth reference
    std::optional<double> wall_mean, wall_std;
};

struct ExperimentReport {
    std::string name;
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<ExperimentRow> rows;
};

namespace detail {

inline std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline std::optional<double> std_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    if (v.size() == 1) return 0.0;
    const double m = *mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Collects the outcomes of repeated runs of one configuration.
struct RowAccumulator {
    std::vector<double> times, rules, support, confidence, lift, leverage, zhangs, overlap;
    std::size_t censored = 0, excluded = 0;

    void add_rules(const std::vector<Rule>& r) {
        const auto s = summarize(r);
        rules.push_back(static_cast<double>(s.rule_count));
        excluded += s.undefined_count;
        if (s.defined_count() == 0) return;
        support.push_back(s.support);
        confidence.push_back(s.confidence);
        lift.push_back(s.lift);
        leverage.push_back(s.leverage);
        zhangs.push_back(s.zhangs);
    }

    ExperimentRow row(std::string experiment, std::string algorithm, std::string parameter, double value,
                      std::optional<std::uint64_t> seed) const {
        ExperimentRow r;
        r.experiment = std::move(experiment);
        r.algorithm = std::move(algorithm);
        r.parameter = std::move(parameter);
        r.value = value;
        r.seed = seed;
        r.runs = times.size();
        r.censored = censored;
        r.rules = mean_of(rules).value_or(0.0);
        r.excluded = excluded;
        r.support = mean_of(support);
        r.confidence = mean_of(confidence);
        r.lift = mean_of(lift);
        r.leverage = mean_of(leverage);
        r.zhangs = mean_of(zhangs);
        r.overlap = mean_of(overlap);
        r.wall_mean = mean_of(times);
        r.wall_std = std_of(times);
        return r;
    }
};

struct MiningOutcome {
    std::vector<Rule> rules;
    double seconds = 0.0;
    bool censored = false;
};

/// Times one mining call; training and data preparation happen outside.
template <class F>
MiningOutcome timed(F&& mine) {
    MiningOutcome out;
    Stopwatch sw;
    try {
        out.rules = mine();
    } catch (const TimeoutError&) {
        out.censored = true;
        out.rules.clear();
    }
    out.seconds = sw.seconds();
    return out;
}

inline MiningOutcome mine_fp(const TransactionSet& d, double min_support, double min_confidence, double timeout) {
    return timed([&] { return fp_growth(d, min_support, min_confidence, Deadline::after_seconds(timeout)); });
}

inline MiningOutcome mine_hho(const TransactionSet& d, HhoConfig cfg, std::uint64_t seed, double timeout) {
    cfg.seed = seed;
    cfg.deadline = Deadline::after_seconds(timeout);
    return timed([&] { return hho_mine(d, cfg).rules; });
}

inline MiningOutcome mine_ae(const AutoencoderModel& model, const TransactionSet& d, ExtractionConfig cfg,
                             double timeout) {
    cfg.deadline = Deadline::after_seconds(timeout);
    MiningOutcome out = timed([&] { return extract_rules(model, d, cfg).rules; });
    // metric counting is evaluation, not rule learning
    out.rules = attach_metrics(std::move(out.rules), d).rules;
    return out;
}

inline void record(RowAccumulator& acc, const MiningOutcome& m) {
    if (m.censored) {
        ++acc.censored;
        return;
    }
    acc.times.push_back(m.seconds);
    acc.add_rules(m.rules);
}

inline SynthData synth_for_seed(const BenchConfig& cfg, std::uint64_t seed) {
    SynthSpec spec = cfg.synth;
    spec.seed = seed;
    return generate(spec);
}

inline TrainConfig train_for_seed(const BenchConfig& cfg, std::uint64_t seed) {
    TrainConfig t = cfg.train;
    t.seed = seed;
    return t;
}

inline TimeSeriesDataset select_sources(const TimeSeriesDataset& ds, const std::set<std::string>& keep) {
    TimeSeriesDataset out;
    out.sources = keep;
    for (const auto& [s, k] : ds.kinds)
        if (keep.count(s)) out.kinds[s] = k;
    for (const auto& r : ds.records)
        if (keep.count(r.source)) out.records.push_back(r);
    return out;
}

inline nlohmann::json dataset_summary(const PreparedData& p) {
    return {{"transactions", p.transactions.size()},
            {"feature_groups", p.transactions.registry().group_count()},
            {"width", p.transactions.width()},
            {"registry_hash", p.transactions.registry().hash()}};
}

inline ExperimentReport new_report(std::string name, const BenchConfig& cfg) {
    ExperimentReport r;
    r.name = std::move(name);
    const auto j = to_json(cfg);
    r.metadata = {{"note", kReportNote},
                  {"config_hash", config_hash(j)},
                  {"config", j},
                  {"seeds", cfg.seeds},
                  {"timings_comparable", !cfg.parallel_seeds}};
    return r;
}

/// Runs `body(seed)` for every seed, concurrently when allowed; results keep
/// seed order.
template <class F>
auto for_seeds(const BenchConfig& cfg, F&& body) {
    using Result = decltype(body(std::uint64_t{}));
    std::vector<Result> out;
    if (!cfg.parallel_seeds) {
        for (auto s : cfg.seeds) out.push_back(body(s));
        return out;
    }
    std::vector<std::future<Result>> futures;
    for (auto s : cfg.seeds) futures.push_back(std::async(std::launch::async, [&body, s] { return body(s); }));
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

}  // namespace detail

/// Wall time of each algorithm over random source subsets of the first
/// seed's synthetic dataset, plus the extractor's antecedent sweep and the
/// FP-Growth support sweep on the full dataset.
inline ExperimentReport run_runtime_scaling(const BenchConfig& cfg) {
    cfg.check();
    auto report = detail::new_report("runtime_scaling", cfg);
    const auto seed = cfg.seeds.front();
    const auto data = detail::synth_for_seed(cfg, seed);
    const std::vector<std::string> all(data.dataset.sources.begin(), data.dataset.sources.end());

    for (auto count : cfg.source_counts) {
        if (count == 0 || count > all.size())
            throw InputError("bench: source count " + std::to_string(count) + " outside 1.." + std::to_string(all.size()));
        std::map<std::string, detail::RowAccumulator> acc;
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            std::mt19937_64 rng(seed * 1000003u + count * 1009u + rep);
            auto pick = all;
            std::shuffle(pick.begin(), pick.end(), rng);
            pick.resize(count);
            SynthData subset{detail::select_sources(data.dataset, {pick.begin(), pick.end()}), data.graph,
                             data.schema, data.binding, data.settings};
            const auto prepared = prepare(subset, cfg.prepare);
            const auto& d = prepared.transactions;
            for (const auto& alg : cfg.algorithms) {
                if (alg == "fp_growth") {
                    detail::record(acc[alg], detail::mine_fp(d, cfg.fp_min_support, cfg.fp_min_confidence, cfg.timeout_secs));
                } else if (alg == "hho") {
                    detail::record(acc[alg], detail::mine_hho(d, cfg.hho, seed + rep, cfg.timeout_secs));
                } else {
                    const auto model = train(d, detail::train_for_seed(cfg, seed + rep)).model;
                    detail::record(acc[alg], detail::mine_ae(model, d, cfg.extraction, cfg.timeout_secs));
                }
            }
        }
        for (const auto& alg : cfg.algorithms)
            report.rows.push_back(acc[alg].row("runtime_scaling", alg, "sources", static_cast<double>(count), seed));
    }

    const bool sweep_ae = cfg.uses("ae") && !cfg.antecedent_sweep.empty();
    const bool sweep_fp = cfg.uses("fp_growth") && !cfg.support_sweep.empty();
    if (sweep_ae || sweep_fp) {
        const auto prepared = prepare(data, cfg.prepare);
        const auto& d = prepared.transactions;
        report.metadata["dataset"] = detail::dataset_summary(prepared);
        if (sweep_ae) {
            const auto model = train(d, detail::train_for_seed(cfg, seed)).model;
            for (int a : cfg.antecedent_sweep) {
                detail::RowAccumulator acc;
                auto ec = cfg.extraction;
                ec.max_antecedents = a;
                for (std::size_t rep = 0; rep < cfg.repetitions; ++rep)
                    detail::record(acc, detail::mine_ae(model, d, ec, cfg.timeout_secs));
                report.rows.push_back(acc.row("antecedent_sweep", "ae", "max_antecedents", a, seed));
            }
        }
        if (sweep_fp) {
            for (double s : cfg.support_sweep) {
                detail::RowAccumulator acc;
                for (std::size_t rep = 0; rep < cfg.repetitions; ++rep)
                    detail::record(acc, detail::mine_fp(d, s, cfg.fp_min_confidence, cfg.timeout_secs));
                report.rows.push_back(acc.row("support_sweep", "fp_growth", "min_support", s, seed));
            }
        }
    }
    return report;
}

/// Per-seed and averaged metrics of every selected algorithm, with overlap
/// against the FP-Growth reference mined on the same bins.
inline ExperimentReport run_quality_comparison(const BenchConfig& cfg) {
    cfg.check();
    auto report = detail::new_report("quality_comparison", cfg);

    struct SeedResult {
        std::map<std::string, detail::RowAccumulator> acc;
        nlohmann::json dataset;
    };
    auto per_seed = detail::for_seeds(cfg, [&](std::uint64_t seed) {
        SeedResult res;
        const auto data = detail::synth_for_seed(cfg, seed);
        const auto prepared = prepare(data, cfg.prepare);
        const auto& d = prepared.transactions;
        res.dataset = detail::dataset_summary(prepared);
        const auto reference = detail::mine_fp(d, cfg.fp_min_support, cfg.fp_min_confidence, cfg.timeout_secs);
        for (const auto& alg : cfg.algorithms) {
            detail::MiningOutcome m;
            if (alg == "fp_growth") {
                m = reference;
            } else if (alg == "hho") {
                m = detail::mine_hho(d, cfg.hho, seed, cfg.timeout_secs);
            } else {
                const auto model = train(d, detail::train_for_seed(cfg, seed)).model;
                m = detail::mine_ae(model, d, cfg.extraction, cfg.timeout_secs);
            }
            auto& a = res.acc[alg];
            detail::record(a, m);
            if (!m.censored && !reference.censored)
                if (auto o = rule_overlap(reference.rules, m.rules)) a.overlap.push_back(*o);
        }
        return res;
    });

    nlohmann::json datasets = nlohmann::json::array();
    std::map<std::string, detail::RowAccumulator> mean;
    for (std::size_t i = 0; i < per_seed.size(); ++i) {
        const auto seed = cfg.seeds[i];
        datasets.push_back({{"seed", seed}, {"summary", per_seed[i].dataset}});
        for (const auto& alg : cfg.algorithms) {
            const auto row = per_seed[i].acc[alg].row("quality_comparison", alg, "seed", static_cast<double>(seed), seed);
            report.rows.push_back(row);
            // aggregate rows average the per-seed means
            auto& m = mean[alg];
            m.censored += row.censored;
            m.excluded += row.excluded;
            if (row.runs) {
                m.times.push_back(*row.wall_mean);
                m.rules.push_back(row.rules);
            }
            for (auto [src, dst] : {std::pair{&row.support, &m.support}, {&row.confidence, &m.confidence},
                                    {&row.lift, &m.lift}, {&row.leverage, &m.leverage}, {&row.zhangs, &m.zhangs},
                                    {&row.overlap, &m.overlap}})
                if (*src) dst->push_back(**src);
        }
    }
    for (const auto& alg : cfg.algorithms)
        report.rows.push_back(mean[alg].row("quality_comparison", alg, "seed", 0.0, std::nullopt));
    report.metadata["datasets"] = datasets;
    report.metadata["reference"] = {{"algorithm", "fp_growth"},
                                    {"min_support", cfg.fp_min_support},
                                    {"min_confidence", cfg.fp_min_confidence}};
    return report;
}

/// One row per similarity threshold: the model of each seed is trained once
/// and probed at every threshold; rows average over seeds.
inline ExperimentReport run_threshold_sweep(const BenchConfig& cfg) {
    cfg.check();
    auto report = detail::new_report("threshold_sweep", cfg);
    auto per_seed = detail::for_seeds(cfg, [&](std::uint64_t seed) {
        const auto data = detail::synth_for_seed(cfg, seed);
        const auto prepared = prepare(data, cfg.prepare);
        const auto& d = prepared.transactions;
        const auto model = train(d, detail::train_for_seed(cfg, seed)).model;
        std::vector<detail::MiningOutcome> out;
        for (double t : cfg.thresholds) {
            auto ec = cfg.extraction;
            ec.similarity_threshold = t;
            out.push_back(detail::mine_ae(model, d, ec, cfg.timeout_secs));
        }
        return out;
    });
    for (std::size_t k = 0; k < cfg.thresholds.size(); ++k) {
        detail::RowAccumulator acc;
        for (const auto& s : per_seed) detail::record(acc, s[k]);
        report.rows.push_back(acc.row("threshold_sweep", "ae", "similarity_threshold", cfg.thresholds[k], std::nullopt));
    }
    return report;
}

// --- report writers ------------------------------------------------------------

inline nlohmann::json to_json(const ExperimentRow& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"experiment", r.experiment},
            {"algorithm", r.algorithm},
            {"parameter", r.parameter},
            {"value", r.value},
            {"seed", r.seed ? nlohmann::json(*r.seed) : nlohmann::json("mean")},
            {"runs", r.runs},
            {"censored", r.censored},
            {"rules", r.rules},
            {"excluded_undefined", r.excluded},
            {"support", opt(r.support)},
            {"confidence", opt(r.confidence)},
            {"lift", opt(r.lift)},
            {"leverage", opt(r.leverage)},
            {"zhangs_metric", opt(r.zhangs)},
            {"overlap", opt(r.overlap)},
            {"wall_mean_s", opt(r.wall_mean)},
            {"wall_std_s", opt(r.wall_std)}};
}

inline nlohmann::json to_json(const ExperimentReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back(to_json(row));
    return {{"report", r.name}, {"metadata", r.metadata}, {"rows", rows}};
}

inline void write_csv(std::ostream& out, const ExperimentReport& r) {
    out << "# " << r.name << ": " << kReportNote << '\n';
    out << "experiment,algorithm,parameter,value,seed,runs,censored,rules,excluded_undefined,support,confidence,"
           "lift,leverage,zhangs_metric,overlap,wall_mean_s,wall_std_s\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& x : r.rows)
        out << x.experiment << ',' << x.algorithm << ',' << x.parameter << ',' << format_number(x.value) << ','
            << (x.seed ? std::to_string(*x.seed) : "mean") << ',' << x.runs << ',' << x.censored << ','
            << format_number(x.rules) << ',' << x.excluded << ',' << opt(x.support) << ',' << opt(x.confidence) << ','
            << opt(x.lift) << ',' << opt(x.leverage) << ',' << opt(x.zhangs) << ',' << opt(x.overlap) << ','
            << opt(x.wall_mean) << ',' << opt(x.wall_std) << '\n';
}

/// gnuplot data blocks, one per (experiment, algorithm, parameter) series,
/// separated by two blank lines so `index` can address them.
inline void write_gnuplot(std::ostream& out, const ExperimentReport& r) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const ExperimentRow*>> series;
    for (const auto& x : r.rows)
        if (x.wall_mean) series[{x.experiment, x.algorithm, x.parameter}].push_back(&x);
    bool first = true;
    for (const auto& [key, rows] : series) {
        if (!first) out << "\n\n";
        first = false;
        out << "# " << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << '\n';
        out << "# " << std::get<2>(key) << " wall_mean_s wall_std_s rules\n";
        for (const auto* x : rows)
            out << format_number(x->value) << ' ' << format_number(*x->wall_mean) << ' '
                << format_number(x->wall_std.value_or(0.0)) << ' ' << format_number(x->rules) << '\n';
    }
}

}  // namespace semrl
