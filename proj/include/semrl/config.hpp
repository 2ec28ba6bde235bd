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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semrl/benchmark.hpp"
#include "semrl/error.hpp"
#include "semrl/format.hpp"

namespace semrl {

// --- TOML-style key/value files ---------------------------------------------
//
// Supported subset: `[section]` headers, `key = value` lines, `#` comments,
// values that are quoted strings, numbers, true/false, or single-line arrays
// of those. Keys are flattened to "section.key".

namespace detail {

class ValueParser {
public:
    ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    nlohmann::json parse() {
        auto v = value();
        skip_space();
        if (pos_ != s_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("config line " + std::to_string(line_) + ": " + what);
    }
    void skip_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    nlohmann::json value() {
        skip_space();
        if (pos_ >= s_.size()) fail("missing value");
        if (s_[pos_] == '"') return string();
        if (s_[pos_] == '[') return array();
        std::size_t end = pos_;
        while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != ' ' && s_[end] != '\t') ++end;
        const auto tok = s_.substr(pos_, end - pos_);
        pos_ = end;
        if (tok == "true") return true;
        if (tok == "false") return false;
        std::int64_t i = 0;
        if (auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i); ec == std::errc{} && p == tok.data() + tok.size())
            return i;
        if (auto d = parse_number(tok); d && std::isfinite(*d)) return *d;
        fail("cannot parse value '" + std::string(tok) + "'");
    }
    nlohmann::json string() {
        std::string out;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
            out += s_[pos_++];
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }
    nlohmann::json array() {
        nlohmann::json out = nlohmann::json::array();
        ++pos_;
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(value());
            skip_space();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ']') {
                ++pos_;
                return out;
            }
            if (s_[pos_] != ',') fail("expected ',' or ']' in array");
            ++pos_;
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_;
};

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace detail

/// Parses one value in config syntax (also used for `--set key=value`).
inline nlohmann::json parse_config_value(std::string_view text, std::size_t line = 0) {
    return detail::ValueParser(trim(text), line).parse();
}

/// Flat object of dotted keys.
inline nlohmann::json parse_config(std::istream& in) {
    nlohmann::json out = nlohmann::json::object();
    std::string section, raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = std::string(trim(detail::strip_comment(raw)));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw InputError("config line " + std::to_string(line_no) + ": malformed section header");
            section = std::string(trim(std::string_view(line).substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = std::string(trim(std::string_view(line).substr(0, eq)));
        if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
        const auto full = section.empty() ? key : section + "." + key;
        if (out.contains(full)) throw InputError("config line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
        out[full] = parse_config_value(std::string_view(line).substr(eq + 1), line_no);
    }
    return out;
}

inline nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// "s1:0, s3:2 -> s2:1" optionally followed by "confidence=0.9 support=0.3".
inline PlantedRule parse_planted_rule(std::string_view text) {
    const auto arrow = text.find("->");
    if (arrow == std::string_view::npos) throw InputError("planted rule '" + std::string(text) + "': missing '->'");
    auto item = [&](std::string_view s) {
        s = trim(s);
        const auto colon = s.rfind(':');
        if (colon == std::string_view::npos) throw InputError("planted item '" + std::string(s) + "': expected source:bin");
        const auto bin = parse_number(s.substr(colon + 1)).value_or(-1.0);
        if (!(bin >= 0) || bin != std::floor(bin)) throw InputError("planted item '" + std::string(s) + "': bad bin index");
        return SourceClass{std::string(trim(s.substr(0, colon))), static_cast<std::size_t>(bin)};
    };
    PlantedRule p;
    for (auto part : split(text.substr(0, arrow), ',')) p.antecedents.push_back(item(part));
    std::istringstream rest{std::string(text.substr(arrow + 2))};
    std::string tok;
    bool have_consequent = false;
    while (rest >> tok) {
        if (const auto eq = tok.find('='); eq != std::string::npos) {
            const auto key = tok.substr(0, eq);
            const auto v = parse_number(tok.substr(eq + 1)).value_or(std::nan(""));
            if (!std::isfinite(v)) throw InputError("planted rule: bad number in '" + tok + "'");
            if (key == "confidence")
                p.confidence = v;
            else if (key == "support")
                p.support = v;
            else
                throw InputError("planted rule: unknown option '" + key + "'");
        } else if (!have_consequent) {
            p.consequent = item(tok);
            have_consequent = true;
        } else {
            throw InputError("planted rule '" + std::string(text) + "': only one consequent allowed");
        }
    }
    if (!have_consequent) throw InputError("planted rule '" + std::string(text) + "': missing consequent");
    return p;
}

inline std::string to_string(const PlantedRule& p) {
    std::string s;
    for (std::size_t i = 0; i < p.antecedents.size(); ++i)
        s += (i ? ", " : "") + p.antecedents[i].source + ":" + std::to_string(p.antecedents[i].bin);
    return s + " -> " + p.consequent.source + ":" + std::to_string(p.consequent.bin) +
           " confidence=" + format_number(p.confidence) + " support=" + format_number(p.support);
}

/// Everything a CLI run needs. Exactly one data origin: input paths or the
/// synthetic generator.
struct RunConfig {
    std::string timeseries, graph, schema, binding, settings;
    bool use_synth = false;
    std::string output_dir = "out";
    std::uint64_t seed = 42;
    unsigned threads = 1;
    double timeout_secs = 0.0;
    std::vector<std::string> experiments{"runtime", "quality", "threshold"};
    BenchConfig bench;  // also carries synth, prepare, train, extraction and baseline settings

    bool has_paths() const { return !timeseries.empty() || !graph.empty() || !binding.empty(); }

    void check_data_origin() const {
        if (use_synth && has_paths()) throw InputError("config: give either input paths or a synth spec, not both");
        if (!use_synth && (timeseries.empty() || graph.empty() || binding.empty()))
            throw InputError("config: need input.timeseries, input.graph and input.binding (or a [synth] section)");
    }
};

namespace detail {

template <class T>
T config_get(const nlohmann::json& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw InputError("");
            return v.get<double>();
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0)) throw InputError("");
            return v.get<T>();
        } else {
            return v.get<T>();
        }
    } catch (const std::exception&) {
        throw InputError("config key '" + key + "': unexpected value " + v.dump());
    }
}

}  // namespace detail

/// Applies a flat dotted-key object to `cfg`; unknown keys are errors.
inline void apply_config(RunConfig& cfg, const nlohmann::json& flat) {
    auto& b = cfg.bench;
    for (const auto& [key, v] : flat.items()) {
        using detail::config_get;
        if (key.rfind("synth.", 0) == 0) cfg.use_synth = true;
        if (key == "seed") cfg.seed = config_get<std::uint64_t>(v, key);
        else if (key == "threads") cfg.threads = config_get<unsigned>(v, key);
        else if (key == "timeout_secs") cfg.timeout_secs = config_get<double>(v, key);
        else if (key == "output_dir") cfg.output_dir = config_get<std::string>(v, key);
        else if (key == "input.timeseries") cfg.timeseries = config_get<std::string>(v, key);
        else if (key == "input.graph") cfg.graph = config_get<std::string>(v, key);
        else if (key == "input.schema") cfg.schema = config_get<std::string>(v, key);
        else if (key == "input.binding") cfg.binding = config_get<std::string>(v, key);
        else if (key == "input.settings") cfg.settings = config_get<std::string>(v, key);
        else if (key == "synth.enabled") cfg.use_synth = config_get<bool>(v, key);
        else if (key == "synth.sources") b.synth.sources = config_get<std::size_t>(v, key);
        else if (key == "synth.categorical_sources") b.synth.categorical_sources = config_get<std::size_t>(v, key);
        else if (key == "synth.categorical_skew") b.synth.categorical_skew = config_get<double>(v, key);
        else if (key == "synth.categorical_classes") b.synth.categorical_classes = config_get<std::size_t>(v, key);
        else if (key == "synth.graph") b.synth.graph = parse_graph_template(config_get<std::string>(v, key));
        else if (key == "synth.nodes") b.synth.nodes = config_get<std::size_t>(v, key);
        else if (key == "synth.transactions") b.synth.transactions = config_get<std::size_t>(v, key);
        else if (key == "synth.noise_rate") b.synth.noise_rate = config_get<double>(v, key);
        else if (key == "synth.bins") b.synth.bins = config_get<int>(v, key);
        else if (key == "synth.planted") {
            b.synth.planted.clear();
            for (const auto& p : config_get<std::vector<std::string>>(v, key)) b.synth.planted.push_back(parse_planted_rule(p));
        }
        else if (key == "prepare.bins") b.prepare.bins = config_get<int>(v, key);
        else if (key == "prepare.neighbor_depth") b.prepare.neighbor_depth = config_get<int>(v, key);
        else if (key == "prepare.graph_bins") b.prepare.graph_bins = config_get<int>(v, key);
        else if (key == "train.learning_rate") b.train.learning_rate = config_get<double>(v, key);
        else if (key == "train.epochs") b.train.epochs = config_get<int>(v, key);
        else if (key == "train.weight_decay") b.train.weight_decay = config_get<double>(v, key);
        else if (key == "train.noise_factor") b.train.noise_factor = config_get<double>(v, key);
        else if (key == "train.batch_size") b.train.batch_size = config_get<int>(v, key);
        else if (key == "train.hidden_dims") b.train.hidden_dims = config_get<std::vector<std::size_t>>(v, key);
        else if (key == "extract.similarity_threshold") b.extraction.similarity_threshold = config_get<double>(v, key);
        else if (key == "extract.max_antecedents") b.extraction.max_antecedents = config_get<int>(v, key);
        else if (key == "fp_growth.min_support") b.fp_min_support = config_get<double>(v, key);
        else if (key == "fp_growth.min_confidence") b.fp_min_confidence = config_get<double>(v, key);
        else if (key == "hho.population") b.hho.population = config_get<std::size_t>(v, key);
        else if (key == "hho.max_iterations") b.hho.max_iterations = config_get<std::size_t>(v, key);
        else if (key == "hho.min_fitness") b.hho.min_fitness = config_get<double>(v, key);
        else if (key == "bench.experiments") cfg.experiments = config_get<std::vector<std::string>>(v, key);
        else if (key == "bench.algorithms") b.algorithms = config_get<std::vector<std::string>>(v, key);
        else if (key == "bench.seeds") b.seeds = config_get<std::vector<std::uint64_t>>(v, key);
        else if (key == "bench.source_counts") b.source_counts = config_get<std::vector<std::size_t>>(v, key);
        else if (key == "bench.repetitions") b.repetitions = config_get<std::size_t>(v, key);
        else if (key == "bench.antecedent_sweep") b.antecedent_sweep = config_get<std::vector<int>>(v, key);
        else if (key == "bench.support_sweep") b.support_sweep = config_get<std::vector<double>>(v, key);
        else if (key == "bench.thresholds") b.thresholds = config_get<std::vector<double>>(v, key);
        else if (key == "bench.parallel_seeds") b.parallel_seeds = config_get<bool>(v, key);
        else throw InputError("config: unknown key '" + key + "'");
    }
}

/// Pushes the run-wide seed, thread count and timeout into the module
/// configurations. The seed drives data generation, weight init and HHO.
inline void finalize(RunConfig& cfg) {
    auto& b = cfg.bench;
    b.synth.seed = cfg.seed;
    b.train.seed = cfg.seed;
    b.hho.seed = cfg.seed;
    b.hho.threads = cfg.threads;
    b.extraction.threads = cfg.threads;
    b.timeout_secs = cfg.timeout_secs;
    if (b.seeds.empty()) b.seeds = {cfg.seed};
    if (cfg.timeout_secs < 0.0) throw InputError("timeout_secs must be >= 0");
    if (!(b.extraction.similarity_threshold > 0.0 && b.extraction.similarity_threshold < 1.0))
        throw InputError("extract.similarity_threshold must lie in (0, 1)");
    if (b.extraction.max_antecedents < 1) throw InputError("extract.max_antecedents must be >= 1");
    if (b.prepare.bins < 1) throw InputError("prepare.bins must be >= 1");
    if (b.prepare.neighbor_depth < 0) throw InputError("prepare.neighbor_depth must be >= 0");
    b.train.check();
    detail::check_thresholds(b.fp_min_support, b.fp_min_confidence);
    for (const auto& e : cfg.experiments)
        if (e != "runtime" && e != "quality" && e != "threshold")
            throw InputError("bench.experiments: unknown experiment '" + e + "' (expected runtime|quality|threshold)");
}

inline nlohmann::json to_json(const RunConfig& c) {
    return {{"input", {{"timeseries", c.timeseries}, {"graph", c.graph}, {"schema", c.schema},
                       {"binding", c.binding}, {"settings", c.settings}}},
            {"use_synth", c.use_synth},
            {"seed", c.seed},
            {"threads", c.threads},
            {"timeout_secs", c.timeout_secs},
            {"experiments", c.experiments},
            {"bench", to_json(c.bench)}};
}

}  // namespace semrl
