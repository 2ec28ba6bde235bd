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

// Command-line driver: synth, ingest, train, extract, mine-fp, mine-hho,
// bench and the end-to-end pipeline. Data goes to files under the output
// directory, logs go to stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semrl.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitBadInput = 2;

void log(const std::string& msg) { std::cerr << "[semrl] " << msg << '\n'; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw semrl::InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Tracks stage timings and writes MANIFEST.json whether the run succeeds
/// or fails.
class Manifest {
public:
    Manifest(std::string command, fs::path dir) : command_(std::move(command)), dir_(std::move(dir)) {}

    template <class F>
    auto stage(const std::string& name, F&& body) {
        log("stage " + name);
        current_ = name;
        semrl::Stopwatch sw;
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            stages_.push_back({{"stage", name}, {"seconds", sw.seconds()}});
        } else {
            auto r = body();
            stages_.push_back({{"stage", name}, {"seconds", sw.seconds()}});
            return r;
        }
    }

    void set_config(const semrl::RunConfig& cfg) {
        config_ = semrl::to_json(cfg);
        seed_ = cfg.seed;
    }

    // Hashes effective settings and input bytes, not input paths.
    void set_inputs(const std::string& input_digest) {
        auto hashed = config_;
        hashed.erase("input");
        hash_ = semrl::to_hex(semrl::fnv1a(hashed.dump() + input_digest));
        input_digest_ = input_digest;
    }

    void artifact(const fs::path& p) { artifacts_.push_back(p.filename().string()); }

    void write(const std::optional<std::string>& error) const {
        nlohmann::json j{{"command", command_},
                         {"version", SEMRL_VERSION},
                         {"config_hash", hash_},
                         {"input_digest", input_digest_},
                         {"seed", seed_},
                         {"config", config_},
                         {"stages", stages_},
                         {"artifacts", artifacts_},
                         {"status", error ? "failed" : "ok"}};
        if (error) {
            j["failed_stage"] = current_;
            j["error"] = *error;
        }
        std::error_code ec;
        fs::create_directories(dir_, ec);
        std::ofstream out(dir_ / "MANIFEST.json");
        if (out) out << j.dump(2) << '\n';
    }

private:
    std::string command_;
    fs::path dir_;
    std::string current_ = "setup";
    nlohmann::json stages_ = nlohmann::json::array();
    nlohmann::json config_ = nlohmann::json::object();
    std::vector<std::string> artifacts_;
    std::string hash_, input_digest_;
    std::uint64_t seed_ = 0;
};

struct Inputs {
    semrl::SynthData data;
    std::optional<semrl::Schema> schema;
};

std::string input_digest(const semrl::RunConfig& cfg, const std::vector<std::string>& extra = {}) {
    std::string digest;
    std::vector<std::string> paths{cfg.timeseries, cfg.graph, cfg.schema, cfg.binding, cfg.settings};
    paths.insert(paths.end(), extra.begin(), extra.end());
    for (const auto& p : paths)
        if (!p.empty()) digest += semrl::to_hex(semrl::fnv1a(read_file(p))) + ";";
    return digest;
}

Inputs load_inputs(const semrl::RunConfig& cfg) {
    Inputs in;
    if (cfg.use_synth) {
        in.data = semrl::generate(cfg.bench.synth);
        in.schema = in.data.schema;
        return in;
    }
    if (!cfg.settings.empty()) in.data.settings = semrl::load_source_settings(cfg.settings);
    std::ifstream ts(cfg.timeseries);
    if (!ts) throw semrl::InputError("cannot open '" + cfg.timeseries + "'");
    try {
        in.data.dataset = semrl::parse_timeseries(ts, in.data.settings);
    } catch (const semrl::InputError& e) {
        throw semrl::InputError("'" + cfg.timeseries + "': " + e.what());
    }
    in.data.graph = semrl::load_graph(cfg.graph);
    in.data.binding = semrl::load_binding(cfg.binding);
    if (!cfg.schema.empty()) in.schema = semrl::load_schema(cfg.schema);
    return in;
}

void write_text(Manifest& m, const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw semrl::InputError("cannot write '" + path.string() + "'");
    out << text;
    m.artifact(path);
}

template <class F>
void write_with(Manifest& m, const fs::path& path, F&& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw semrl::InputError("cannot write '" + path.string() + "'");
    body(out);
    m.artifact(path);
}

void write_rules(Manifest& m, const fs::path& path, const semrl::FeatureRegistry& reg, const std::vector<semrl::Rule>& rules) {
    write_with(m, path, [&](std::ostream& out) { semrl::write_rules_jsonl(out, reg, rules); });
}

nlohmann::json summary_json(const semrl::MetricSummary& s) {
    return {{"rule_count", s.rule_count}, {"undefined_excluded", s.undefined_count}, {"support", s.support},
            {"confidence", s.confidence}, {"lift", s.lift},                          {"leverage", s.leverage},
            {"zhangs_metric", s.zhangs}};
}

nlohmann::json validation_json(const semrl::ValidationReport& r) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : r.violations)
        v.push_back({{"kind", x.kind == semrl::Violation::Kind::label ? "label" : "property"},
                     {"element", x.element},
                     {"name", x.name}});
    return {{"conforms", r.conforms()}, {"violations", v}};
}

semrl::PreparedData prepare_stage(Manifest& m, const Inputs& in, const semrl::RunConfig& cfg, const fs::path& out) {
    if (in.schema) {
        const auto report = semrl::validate_graph(in.data.graph, *in.schema);
        if (!report.conforms()) log("graph has " + std::to_string(report.violations.size()) + " schema violation(s)");
        write_text(m, out / "validation.json", validation_json(report).dump(2) + "\n");
    }
    return m.stage("prepare", [&] { return semrl::prepare(in.data, cfg.bench.prepare); });
}

void write_prepared(Manifest& m, const semrl::PreparedData& p, const fs::path& out) {
    write_with(m, out / "transactions.csv", [&](std::ostream& o) { semrl::write_transactions_csv(o, p.transactions); });
    write_text(m, out / "registry.json", semrl::to_json(p.transactions.registry()).dump(2) + "\n");
    nlohmann::json bins = nlohmann::json::object();
    for (const auto& [s, scheme] : p.schemes) bins[s] = scheme.labels();
    write_text(m, out / "bins.json", bins.dump(2) + "\n");
}

struct Options {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<double> timeout;
    std::optional<std::string> out, timeseries, graph, schema, binding, settings, model;
    bool synth = false;
    std::optional<double> threshold, min_support, min_confidence;
    std::optional<int> max_antecedents, bins, epochs;
    std::optional<std::size_t> population, iterations;
    std::vector<std::string> experiments, algorithms;
};

semrl::RunConfig resolve_config(const Options& o) {
    semrl::RunConfig cfg;
    if (!o.config_path.empty()) semrl::apply_config(cfg, semrl::load_config(o.config_path));
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw semrl::InputError("--set expects key=value, got '" + s + "'");
        overrides[std::string(semrl::trim(s.substr(0, eq)))] = semrl::parse_config_value(s.substr(eq + 1));
    }
    semrl::apply_config(cfg, overrides);
    // dedicated flags win over the config file and --set
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.timeout) cfg.timeout_secs = *o.timeout;
    if (o.out) cfg.output_dir = *o.out;
    if (o.timeseries) cfg.timeseries = *o.timeseries;
    if (o.graph) cfg.graph = *o.graph;
    if (o.schema) cfg.schema = *o.schema;
    if (o.binding) cfg.binding = *o.binding;
    if (o.settings) cfg.settings = *o.settings;
    if (o.synth) cfg.use_synth = true;
    auto& b = cfg.bench;
    if (o.threshold) b.extraction.similarity_threshold = *o.threshold;
    if (o.max_antecedents) b.extraction.max_antecedents = *o.max_antecedents;
    if (o.bins) b.prepare.bins = *o.bins;
    if (o.epochs) b.train.epochs = *o.epochs;
    if (o.min_support) b.fp_min_support = *o.min_support;
    if (o.min_confidence) b.fp_min_confidence = *o.min_confidence;
    if (o.population) b.hho.population = *o.population;
    if (o.iterations) b.hho.max_iterations = *o.iterations;
    if (!o.experiments.empty()) cfg.experiments = o.experiments;
    if (!o.algorithms.empty()) b.algorithms = o.algorithms;
    semrl::finalize(cfg);
    return cfg;
}

int run(const std::string& command, const Options& o) {
    semrl::RunConfig cfg;
    try {
        cfg = resolve_config(o);
    } catch (const semrl::InputError& e) {
        log(std::string("error: ") + e.what());
        return kExitBadInput;
    }
    const fs::path out = cfg.output_dir;
    Manifest m(command, out);
    try {
        m.set_config(cfg);
        fs::create_directories(out);
        if (command != "bench") cfg.check_data_origin();
        const std::string model_path = o.model.value_or((out / "model.json").string());
        m.set_inputs(command == "extract" ? input_digest(cfg, {model_path}) : input_digest(cfg));
        const auto& b = cfg.bench;

        if (command == "synth") {
            if (!cfg.use_synth) throw semrl::InputError("synth: needs a [synth] section or --synth");
            const auto data = m.stage("generate", [&] { return semrl::generate(b.synth); });
            write_with(m, out / "timeseries.csv", [&](std::ostream& s) { semrl::write_timeseries_csv(s, data.dataset); });
            write_text(m, out / "graph.json", semrl::to_json(data.graph).dump(2) + "\n");
            write_text(m, out / "schema.json", semrl::to_json(data.schema).dump(2) + "\n");
            write_text(m, out / "binding.json", semrl::to_json(data.binding).dump(2) + "\n");
            write_text(m, out / "settings.json", semrl::to_json(data.settings).dump(2) + "\n");
        } else if (command == "bench") {
            for (const auto& e : cfg.experiments) {
                auto report = m.stage("bench:" + e, [&] {
                    if (e == "runtime") return semrl::run_runtime_scaling(b);
                    if (e == "quality") return semrl::run_quality_comparison(b);
                    return semrl::run_threshold_sweep(b);
                });
                write_with(m, out / (report.name + ".csv"), [&](std::ostream& s) { semrl::write_csv(s, report); });
                write_text(m, out / (report.name + ".json"), semrl::to_json(report).dump(2) + "\n");
                write_with(m, out / (report.name + ".dat"), [&](std::ostream& s) { semrl::write_gnuplot(s, report); });
            }
        } else {
            const auto inputs = m.stage("load", [&] { return load_inputs(cfg); });
            const auto prepared = prepare_stage(m, inputs, cfg, out);
            const auto& d = prepared.transactions;
            log(std::to_string(d.size()) + " transactions, " + std::to_string(d.registry().group_count()) +
                " feature groups, width " + std::to_string(d.width()));
            if (command == "ingest" || command == "pipeline") write_prepared(m, prepared, out);

            std::optional<semrl::AutoencoderModel> model;
            if (command == "train" || command == "pipeline") {
                auto trained = m.stage("train", [&] { return semrl::train(d, b.train); });
                write_text(m, out / "model.json", semrl::to_json(trained.model).dump() + "\n");
                std::string loss = "epoch,loss\n";
                for (std::size_t e = 0; e < trained.loss_trace.size(); ++e)
                    loss += std::to_string(e + 1) + "," + semrl::format_number(trained.loss_trace[e]) + "\n";
                write_text(m, out / "loss.csv", loss);
                model = std::move(trained.model);
            }
            if (command == "extract") {
                model = m.stage("load-model", [&] {
                    nlohmann::json j;
                    try {
                        j = nlohmann::json::parse(read_file(model_path));
                    } catch (const nlohmann::json::exception& e) {
                        throw semrl::InputError("'" + model_path + "': " + e.what());
                    }
                    return semrl::model_from_json(j, d.registry().hash());
                });
            }
            if (command == "extract" || command == "pipeline") {
                semrl::Stopwatch sw;
                auto extraction = b.extraction;
                extraction.deadline = semrl::Deadline::after_seconds(cfg.timeout_secs);
                auto result = m.stage("extract", [&] { return semrl::extract_rules(*model, d, extraction); });
                const double seconds = sw.seconds();
                auto annotated = m.stage("metrics", [&] { return semrl::attach_metrics(std::move(result.rules), d); });
                if (annotated.dropped) log(std::to_string(annotated.dropped) + " rule(s) dropped: antecedent never occurs");
                write_rules(m, out / "rules.jsonl", d.registry(), annotated.rules);
                const nlohmann::json metrics{{"algorithm", "ae"},
                                             {"summary", summary_json(semrl::summarize(annotated.rules))},
                                             {"dropped_undefined", annotated.dropped},
                                             {"vectors_evaluated", result.vectors_evaluated},
                                             {"extract_seconds", seconds}};
                write_text(m, out / "metrics.json", metrics.dump(2) + "\n");
                log(std::to_string(annotated.rules.size()) + " rules written");
            }
            if (command == "mine-fp") {
                semrl::Stopwatch sw;
                auto rules = m.stage("fp_growth", [&] {
                    return semrl::fp_growth(d, b.fp_min_support, b.fp_min_confidence,
                                            semrl::Deadline::after_seconds(cfg.timeout_secs));
                });
                const double seconds = sw.seconds();
                write_rules(m, out / "rules_fp.jsonl", d.registry(), rules);
                const nlohmann::json stats{{"algorithm", "fp_growth"},
                                           {"summary", summary_json(semrl::summarize(rules))},
                                           {"wall_seconds", seconds}};
                write_text(m, out / "fp_stats.json", stats.dump(2) + "\n");
                log(std::to_string(rules.size()) + " rules written");
            }
            if (command == "mine-hho") {
                semrl::Stopwatch sw;
                auto hc = b.hho;
                hc.deadline = semrl::Deadline::after_seconds(cfg.timeout_secs);
                auto result = m.stage("hho", [&] { return semrl::hho_mine(d, hc); });
                const double seconds = sw.seconds();
                write_rules(m, out / "rules_hho.jsonl", d.registry(), result.rules);
                const nlohmann::json stats{{"algorithm", "hho"},
                                           {"summary", summary_json(semrl::summarize(result.rules))},
                                           {"iterations", result.iterations},
                                           {"evaluations", result.evaluations},
                                           {"best_fitness", result.best_fitness},
                                           {"min_fitness_kept", result.min_fitness_kept},
                                           {"wall_seconds", seconds}};
                write_text(m, out / "hho_stats.json", stats.dump(2) + "\n");
                log(std::to_string(result.rules.size()) + " rules written");
            }
        }
        m.write(std::nullopt);
        return kExitOk;
    } catch (const semrl::InputError& e) {
        log(std::string("error: ") + e.what());
        m.write(e.what());
        return kExitBadInput;
    } catch (const semrl::TimeoutError& e) {
        log(std::string("error: ") + e.what());
        m.write(e.what());
        return kExitInternal;
    } catch (const std::exception& e) {
        log(std::string("internal error: ") + e.what());
        m.write(e.what());
        return kExitInternal;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic association rule learning from enriched time series"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", SEMRL_VERSION);
    app.fallthrough();

    Options o;
    auto opt = [&](const char* name, auto& target, const char* help) { return app.add_option(name, target, help); };
    opt("--config", o.config_path, "TOML-style config file")->check(CLI::ExistingFile);
    opt("--set", o.sets, "Override a config key, e.g. --set train.epochs=5");
    opt("--seed", o.seed, "Seed for data generation, weight init and HHO");
    opt("--threads", o.threads, "Worker threads for extraction and HHO");
    opt("--timeout-secs", o.timeout, "Deadline per mining call (0 = none)");
    opt("--out", o.out, "Output directory");
    opt("--timeseries", o.timeseries, "Time series CSV (source_id,timestamp,value)");
    opt("--graph", o.graph, "Property graph JSON");
    opt("--schema", o.schema, "Schema JSON (optional, enables validation)");
    opt("--binding", o.binding, "Source-to-node binding JSON");
    opt("--settings", o.settings, "Per-source settings JSON (kind, bins)");
    app.add_flag("--synth", o.synth, "Use the synthetic generator instead of input files");
    opt("--model", o.model, "Model JSON for extract (default: <out>/model.json)");
    opt("--threshold", o.threshold, "Similarity threshold in (0,1)");
    opt("--max-antecedents", o.max_antecedents, "Maximum antecedents per rule");
    opt("--bins", o.bins, "Equal-frequency bins per numerical source");
    opt("--epochs", o.epochs, "Training epochs");
    opt("--min-support", o.min_support, "FP-Growth minimum support");
    opt("--min-confidence", o.min_confidence, "FP-Growth minimum confidence");
    opt("--population", o.population, "HHO population size");
    opt("--iterations", o.iterations, "HHO iterations");
    opt("--experiments", o.experiments, "bench: runtime, quality, threshold");
    opt("--algorithms", o.algorithms, "bench: ae, fp_growth, hho");

    const std::vector<std::pair<const char*, const char*>> commands{
        {"synth", "Generate a synthetic dataset with planted rules"},
        {"ingest", "Discretize, enrich and encode; write the transaction dump"},
        {"train", "Train the denoising autoencoder"},
        {"extract", "Extract rules from a trained model"},
        {"mine-fp", "Mine rules with FP-Growth"},
        {"mine-hho", "Mine rules with Harris Hawks Optimization"},
        {"bench", "Run benchmark experiments"},
        {"pipeline", "ingest + train + extract in one run"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadInput;
    }
    return run(app.get_subcommands().front()->get_name(), o);
}
